"""Exception hierarchy shared across the package.

Every domain failure derives from SurveyBnError so callers (CLI, service)
can map the whole family onto one exit code / HTTP status.
"""


class SurveyBnError(Exception):
    """Base class for all domain errors raised by surveybn."""


# -- graph / model ------------------------------------------------------------

class CycleError(SurveyBnError):
    """An edge or edge set would close a directed cycle."""


class DuplicateEdge(SurveyBnError):
    """The edge is already present."""


class OverlapError(SurveyBnError):
    """Node sets passed to a separation query are not pairwise disjoint."""


class IncompleteAssignment(SurveyBnError):
    """A full-joint evaluation was given a partial or invalid assignment."""


# -- tables -------------------------------------------------------------------

class EmptyTable(SurveyBnError):
    """CSV source has no header or no data rows."""


class RaggedRow(SurveyBnError):
    """A CSV row has the wrong number of cells."""


class UnknownStateLabel(SurveyBnError):
    """A cell value is not a state of the supplied schema."""


class MissingColumn(SurveyBnError):
    """A referenced column is not present in the table."""


class UnsortedEdges(SurveyBnError):
    """Histogram bin edges are not strictly ascending."""


class DegenerateClass(SurveyBnError):
    """A stratum has too few rows to split."""


class TooFewMinority(SurveyBnError):
    """Minority class smaller than the neighbour count needed for SMOTE."""


class NonBinaryLabel(SurveyBnError):
    """The label column is not binary."""


# -- structure learning -------------------------------------------------------

class EmptyData(SurveyBnError):
    """An operation that needs observations received zero rows."""


class ConstraintUnsatisfiable(SurveyBnError):
    """No DAG can satisfy the supplied search constraints."""


# -- inference ----------------------------------------------------------------

class VarInEvidence(SurveyBnError):
    """The query variable is itself part of the evidence."""


class ImpossibleEvidence(SurveyBnError):
    """The evidence set has probability zero under the model."""


# -- classifiers --------------------------------------------------------------

class SingleClassTrain(SurveyBnError):
    """Training labels contain a single class."""


class SingleClassLabels(SurveyBnError):
    """Evaluation labels contain a single class."""


class SchemaMismatch(SurveyBnError):
    """Prediction input does not match the feature schema seen at fit time."""


# -- interface ----------------------------------------------------------------

class UnknownVariable(SurveyBnError):
    """A request names a variable that is not in the model."""


class UnknownState(SurveyBnError):
    """A request names a state that the variable does not have."""


class MalformedRequest(SurveyBnError):
    """A query/what-if request body is structurally invalid."""
