"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied input: files, records, config values.

    The CLI maps this to exit code 2; anything else raised inside a stage
    maps to exit code 3.
    """
