class ExportError(Exception):
    """A checkpoint could not be exported (wrong head, tokenization or
    inference failure). Messages name the offending example id when one
    specific input is to blame."""
