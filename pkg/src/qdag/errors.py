"""Exception hierarchy shared by all qdag modules."""


class QDagError(Exception):
    """Base class for every error raised by this package."""


class StructureError(QDagError, ValueError):
    """A mutation would break a structural invariant of a Q-DAG.

    ``code`` is a short machine-readable tag such as ``"duplicate-parent"``.
    """

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


class ParseError(QDagError, ValueError):
    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class NetworkError(ParseError):
    """Malformed or inconsistent belief network."""


class EvidenceError(QDagError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ZeroProbabilityEvidence(QDagError, ZeroDivisionError):
    """Evidence has probability zero under the model; posteriors are undefined."""


class EquivalenceError(QDagError, ValueError):
    """Two Q-DAGs cannot be compared (mismatched ESN or query sets)."""
