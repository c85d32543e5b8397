"""Prompt templates for LLM-generated respondent panels."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from ..model_spec import ModelSpec, builtin_model

SEVEN_POINT_ANCHORS = (
    "On a 7-point scale, 1. Highly Unlikely;2. Unlikely;3. Somewhat Unlikely;4. Neutral;"
    "5. Somewhat Likely;6. Likely; 7. Highly Likely"
)

STUDY1_BACKGROUND = (
    "Assume we have a student population with an equal number of gender, different age groups, "
    "majors and years in university with various ChatGPT experiences."
)
STUDY1_INSTRUCTION = (
    "Construct a list of {rows} student samples with the above profile and their response based on "
    "the student experiences with ChatGPT. Response to the following statements that reflect the "
    "individual, no need to explain.\n"
    "The correlation between constructs {constructs} should be at the acceptable range\n"
    "The correlation within the construct should be at the acceptable range.\n"
    "Do you understand the requirement for correlation on constructs? Answer this question first. "
    "Explain the requirements."
)
STUDY1_CLOSING = (
    "Present a nice response table of your option that can copy to Excel. Each row represents a "
    "trial and the column represents the item's number. Include columns on the left that indicate "
    "trial, student age, gender (male :1, female:2), major, year in university (1 to 4), and ChatGPT "
    "experience (0 to 4). Produce a total of {rows} rows."
)

# Study 2 follows the same structure; its item statements must be supplied.
STUDY2_BACKGROUND = (
    "Assume we have a student population with different age groups, gender, majors, English "
    "ability and AR experiences."
)
STUDY2_INSTRUCTION = STUDY1_INSTRUCTION.replace("with ChatGPT", "with the VR learning system")
STUDY2_CLOSING = (
    "Present a nice response table of your option that can copy to Excel. Each row represents a "
    "trial and the column represents the item's number. Include columns on the left that indicate "
    "trial, student age, gender (male :1, female:2), English ability (1 to 4), and familiarity with "
    "VR (1 to 4). Produce a total of {rows} rows."
)


@dataclass(frozen=True)
class PromptTemplate:
    study: str
    background: str
    instruction: str
    scale_line: str
    items: tuple  # ((name, statement or None), ...)
    closing: str
    demographic_columns: tuple
    construct_order: tuple
    rows_per_batch: int = 20

    def __post_init__(self):
        if self.rows_per_batch < 1:
            raise ConfigError("rows_per_batch must be at least 1")

    @classmethod
    def from_model(cls, study: str, spec: ModelSpec, rows_per_batch: int = 20,
                   construct_order=None) -> "PromptTemplate":
        if study == "study1":
            parts = (STUDY1_BACKGROUND, STUDY1_INSTRUCTION, STUDY1_CLOSING)
        else:
            parts = (STUDY2_BACKGROUND, STUDY2_INSTRUCTION, STUDY2_CLOSING)
        items = tuple((it.name, it.text) for c in spec.constructs for it in c.items)
        return cls(study, parts[0], parts[1], SEVEN_POINT_ANCHORS, items, parts[2],
                   spec.demographic_names, tuple(construct_order or spec.construct_names),
                   rows_per_batch)


def _join_names(names) -> str:
    names = list(names)
    if len(names) < 2:
        return "".join(names)
    return ", ".join(names[:-1]) + ", and " + names[-1]


def study_template(study: str, rows_per_batch: int = 20, spec: ModelSpec | None = None) -> PromptTemplate:
    spec = spec or builtin_model(study)
    # the Study 1 prompt lists constructs in this order
    order = ("PU", "PEOU", "BI", "CPLAY") if study == "study1" else None
    return PromptTemplate.from_model(study, spec, rows_per_batch, order)


def render_prompt(template: PromptTemplate, batch_index: int = 0) -> str:
    """Render the full prompt text.

    The profile constraints are restated for every batch, so the text does not
    depend on ``batch_index``; it is accepted for a uniform call signature.
    """
    missing = [name for name, text in template.items if not (text and text.strip())]
    if missing:
        raise ConfigError(f"missing item statements for {', '.join(missing)}")
    rows = template.rows_per_batch
    item_lines = "\n".join(f"{name} {text.strip()}" for name, text in template.items)
    return "\n".join([
        "Background:",
        template.background,
        "",
        "Instruction:",
        template.instruction.format(rows=rows, constructs=_join_names(template.construct_order)),
        "",
        template.scale_line,
        "",
        item_lines,
        "",
        template.closing.format(rows=rows),
    ]) + "\n"
