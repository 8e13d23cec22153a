"""Grammar-based generation of shell scripts for testing POSIX shells."""

__version__ = "0.1.0"

from .generators import GeneratedScript, GeneratorKind  # noqa: E402
from .grammar import Grammar, derive, load_grammar, load_shipped  # noqa: E402

__all__ = ["GeneratedScript", "GeneratorKind", "Grammar", "derive", "load_grammar", "load_shipped", "__version__"]
