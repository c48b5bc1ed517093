"""Exception hierarchy shared across the engine."""


class FactArenaError(Exception):
    """Base class for all engine errors."""


# --- gateway ---------------------------------------------------------------

class ProviderUnreachable(FactArenaError):
    """Network failure or 5xx persisting past the retry budget."""


class AuthError(FactArenaError):
    """Provider rejected the credential."""


class BudgetExceeded(FactArenaError):
    """Configured call cap hit."""


class SearchUnavailable(FactArenaError):
    """Search backend down or failing."""


class EmptyResults(FactArenaError):
    """Search returned no hits; pipelines may proceed with empty context."""


class WikiUnavailable(FactArenaError):
    """Wikipedia backend down or failing."""


# --- parsing / protocol ----------------------------------------------------

class ParseError(FactArenaError):
    """Model output did not match the expected grammar after re-prompts."""


class DegenerateReversal(FactArenaError):
    """Claim reversal returned the input unchanged twice."""


class LabelDriftSuspected(FactArenaError):
    """Evolver self-reported that the verdict may not be preserved."""


class MissingGuideline(FactArenaError):
    """A battle was requested without its reference guidelines."""


class EmptyPanel(FactArenaError):
    """Self-family filtering removed every judge from the panel."""


class NoValidJudgments(FactArenaError):
    """A battle produced zero valid judgment records."""


# --- rating ----------------------------------------------------------------

class UnknownModel(FactArenaError):
    """An outcome references a model not present in the rating table."""


class NotConverged(FactArenaError):
    """Bradley-Terry iteration hit the iteration cap before tolerance."""


class DisconnectedGraph(FactArenaError):
    """Comparison graph is disconnected and no prior is enabled."""


class NonFinite(FactArenaError):
    """Log-likelihood evaluated to a non-finite value."""


class NoRuns(FactArenaError):
    """Accuracy requested for a model with no valid pipeline runs."""


# --- scheduling / storage / cli -------------------------------------------

class PoolTooSmall(FactArenaError):
    """Sample size exceeds the model pool."""


class SchemaViolation(FactArenaError):
    """Record payload fails its kind's schema."""


class CorruptLine(FactArenaError):
    """Unparseable line in a pool file (strict mode)."""


class UnmappableLabel(FactArenaError):
    """Dataset row label outside the binary Supported/Refuted scheme."""


class NoEvolutionData(FactArenaError):
    """Evolution curve requested on a pool without lineage records."""


class ConfigError(FactArenaError):
    """Run configuration invalid; message names the offending key."""
