"""Protocol-compliance checking and debriefing for call transcripts."""

__version__ = "0.1.0"

from .formulas import Requirement, RequirementSet, Severity
from .monitor import Assessment, Outcome, Verdict, evaluate_requirement_set
from .predicate import LexiconBackend, link_requirements
from .specdsl import parse_spec, serialize_spec
from .templates import default_requirement_set, instantiate_template
from .trace import Party, ScenarioContext, Speaker, Trace, Utterance, parse_transcript

__all__ = [
    "Assessment",
    "Outcome",
    "Party",
    "Requirement",
    "RequirementSet",
    "ScenarioContext",
    "Severity",
    "Speaker",
    "Trace",
    "Utterance",
    "Verdict",
    "default_requirement_set",
    "evaluate_requirement_set",
    "instantiate_template",
    "LexiconBackend",
    "link_requirements",
    "parse_spec",
    "parse_transcript",
    "serialize_spec",
]
