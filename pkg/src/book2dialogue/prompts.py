"""Prompt templates for the role-play, single-instance, infill, and
question-generation strategies. Absent fields render as "N/A" so the slot
structure is stable across info levels."""
from __future__ import annotations

from .corpus import Section, StudentContext
from .dialogue import Dialogue, render_history
from .errors import EmptySection

STUDENT_TEMPLATE = """\
Task: You are a student preparing to ask questions about a textbook subsection to a teacher. \
Your goal is to uncover the key information from this subsection. Based on the teacher's responses, \
you'll further inquire to get a comprehensive understanding. Make sure to ask specific questions about \
the subsection's content and avoid repeating queries from prior discussions.

Information Provided:
1. Section Title: {title}
2. Subsection Title: {subsection_titles}
3. Section Summary: {summary}
4. Bold Terms in Section: {bold_terms}
5. Learning Objectives: {learning_objectives}
6. Concepts in Section: {key_concepts}
7. Section Introduction: {introduction}

Previous Conversation:
{history}

*Note:* Frame your questions considering the information above and ensure they're relevant to the content. \
Do not ask questions about information you already have. Only ask one question at a time.

Expected Output: Please phrase your question as a string."""

TEACHER_TEMPLATE = """\
Task: You are a teacher preparing to answer a student's question about a subsection of a textbook. \
The student's question is: {question}. Provide a concise, specific response, ensuring it's not a summary \
and distinct from any previous answers you've given.

Information Provided:
1. Section Title: {title}
2. Subsection Title: {subsection_titles}
3. Subsection Content: {content}
4. Section Summary: {summary}
5. Bold Terms in Section: {bold_terms}
6. Learning Objectives: {learning_objectives}
7. Concepts in Section: {key_concepts}
8. Section Introduction: {introduction}

Previous Conversation:
{history}

*Note:* When crafting your response, consider all the information above. Be sure your answer directly \
addresses the student's question and is not a repetition of prior information.

Expected Output: Please phrase your answer as a string."""

SINGLE_INSTANCE_TEMPLATE = """\
Task: generate a conversation between a student and a teacher using the given section.

Introduction:
1. The conversation should contain 6 question-answer pairs.
2. The output conversation should be in this format: student: ... teacher: ... student: ...
3. The given section: {section}"""

INFILL_TEMPLATE = """\
Task: Fill in the masked student utterance in this teacher-student conversation. \
The teacher's next reply is already known; write only the single student utterance \
that belongs at <mask>, phrased as a question that the teacher's next reply answers.

Conversation:
{prefix}
Student: <mask>
Teacher: {next_sentence}

Expected Output: the masked student utterance only, as a string."""

QG_TEMPLATE = """\
Task: You are a student asking questions about a textbook section you have not read. \
Using only the information below and the conversation so far, ask the next question. \
Only ask one question at a time.

Information Provided:
1. Section Title: {title}
2. Section Summary: {summary}

Previous Conversation:
{history}

Expected Output: Please phrase your question as a string."""


def _slot(context: StudentContext, name: str) -> str:
    value = context.rendered_fields.get(name, "")
    return value if value else "N/A"


def build_student_prompt(context: StudentContext, history: Dialogue) -> str:
    """Render the role-play student prompt from the student's partial view."""
    return STUDENT_TEMPLATE.format(
        title=_slot(context, "title"),
        subsection_titles=_slot(context, "subsection_titles"),
        summary=_slot(context, "summary"),
        bold_terms=_slot(context, "bold_terms"),
        learning_objectives=_slot(context, "learning_objectives"),
        key_concepts=_slot(context, "key_concepts"),
        introduction=_slot(context, "introduction"),
        history=render_history(history),
    )


def build_teacher_prompt(section: Section, question: str, history: Dialogue) -> str:
    """Render the role-play teacher prompt with the full section content."""
    if not section.content.strip():
        raise EmptySection(f"section {section.id!r} has empty content")
    if not question.strip():
        raise ValueError("question must be non-empty")
    fmt = section.formatting
    return TEACHER_TEMPLATE.format(
        question=question,
        title=fmt.title,
        subsection_titles="; ".join(section.subsection_titles) or "N/A",
        content=section.content,
        summary=fmt.summary or "N/A",
        bold_terms="; ".join(fmt.bold_terms) or "N/A",
        learning_objectives="; ".join(fmt.learning_objectives) or "N/A",
        key_concepts="; ".join(fmt.key_concepts) or "N/A",
        introduction=fmt.introduction or "N/A",
        history=render_history(history),
    )


def build_single_instance_prompt(section: Section) -> str:
    if not section.content.strip():
        raise EmptySection(f"section {section.id!r} has empty content")
    fmt = section.formatting
    parts = [
        f"Title: {fmt.title}",
        f"Summary: {fmt.summary}" if fmt.summary else "",
        f"Introduction: {fmt.introduction}" if fmt.introduction else "",
        f"Learning Objectives: {'; '.join(fmt.learning_objectives)}"
        if fmt.learning_objectives else "",
        f"Bold Terms: {'; '.join(fmt.bold_terms)}" if fmt.bold_terms else "",
        f"Key Concepts: {'; '.join(fmt.key_concepts)}" if fmt.key_concepts else "",
        f"Content: {section.content}",
    ]
    section_blob = "\n".join(p for p in parts if p)
    return SINGLE_INSTANCE_TEMPLATE.format(section=section_blob)


def build_infill_prompt(seed_line: str, history: Dialogue, next_sentence: str) -> str:
    prefix_lines = [f"Teacher: {seed_line}"]
    rendered = render_history(history)
    if rendered:
        prefix_lines.append(rendered)
    return INFILL_TEMPLATE.format(prefix="\n".join(prefix_lines),
                                  next_sentence=next_sentence)


def build_qg_prompt(context: StudentContext, history: Dialogue) -> str:
    return QG_TEMPLATE.format(
        title=_slot(context, "title"),
        summary=_slot(context, "summary"),
        history=render_history(history),
    )
