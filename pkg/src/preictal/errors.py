"""Error type shared by the file formats, configuration and CLI layers."""
from __future__ import annotations

# Stable machine-parsable error codes. CLI failures print exactly one line
# of the form "<code>: <message>" on stderr.
E_USAGE = "E_USAGE"      # bad flags / unknown subcommand
E_FORMAT = "E_FORMAT"    # malformed input file
E_CONFIG = "E_CONFIG"    # bad configuration file or value
E_INVALID = "E_INVALID"  # violated operation precondition
E_IO = "E_IO"            # missing or unwritable file


class PipelineError(Exception):
    """Error carrying a stable code prefix for single-line CLI reporting."""

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = " ".join(str(message).split())  # force single line
        super().__init__(f"{code}: {self.message}")
