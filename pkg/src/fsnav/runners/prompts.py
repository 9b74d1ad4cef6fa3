"""Prompt templates, verbatim, keyed by ``<family>__<dataset>``.

Families: ``coding_agent`` (agent without retriever), ``coding_agent_retriever``
(agent told about the retriever CLI), ``react`` (tool-calling baseline) and
``full_context`` (also used by RAG with retrieved units as the context).
Placeholders are ``{identifier}``; every other character is literal, including
``\\boxed{}``.
"""

from __future__ import annotations

import re
from collections.abc import Mapping

from ..errors import MissingVariable

TEMPLATES: dict[str, str] = {}

TEMPLATES["coding_agent__browsecomp-plus"] = 'Answer the following question by iterating through files under folder {context_location}:\n\nQuestion:\n{question}\n\nBrowseCompPlus_Corpus contains 100k files, and some of the files contain information needed to answer this question.'

TEMPLATES["coding_agent__oolong_synthetic"] = 'Answer the following question using text from file\n{context_location}\n\nThe description of the txt file is included at the start of the file.\n\nQuestion: {question}\n\nNote: Labels are not provided, you should determine label by yourself.'

TEMPLATES["coding_agent__oolong_real"] = 'Answer the following question using text from file\n{context_location}\n\nThe description of the txt file is included at the start of the file.\n\nQuestion: {question}'

TEMPLATES["coding_agent__longbench"] = 'Answer the question below using text from file {context_location}\n\nQuestion:\n{Question}\n\nChoices:\n(A) {Choice_A}\n(B) {Choice_B}\n(C) {Choice_C}\n(D) {Choice_D}\n\nChoose only one option.\n\nFormat your response as follows: "The correct answer is (insert answer here)".'

TEMPLATES["coding_agent__nq"] = 'Answer the following question by iterating through the corpus {context_location}\n\nQuestion:\n{question}\n\nAnswer the question based on the given document. Only give me the answer and do not output any other words.'

TEMPLATES["coding_agent_retriever__browsecomp-plus"] = 'Answer the following question by iterating through files under folder {context_location}:\n\nQuestion:\n{question}\n\nBrowseCompPlus_Corpus contains 100k files, and some of the files contain information needed to answer this question.\n\nHere is a retriever you may use to search for documents:\n\npython3 retriever.py --dataset browsecomp-plus --embedding-model {embedding_model} --top-k 5 --query "your query here"\n\nKeep in mind that there are 100k documents in the corpus. When using the retriever for your search, carefully format your query to be multi-faceted.'

TEMPLATES["coding_agent_retriever__oolong_synthetic"] = 'Answer the following question using text from file\n{context_location}\n\nThe description of the txt file is included at the start of the file.\n\nQuestion: {question}\n\nNote: Labels are not provided, you should determine label by yourself.\n\nYou may use the following retriever to find top-k representative chunks (each chunk has 300 words) from the txt file:\n\npython retriever.py --dataset oolong_synthetic --embedding-model {embedding_model} --query "your query here" --top-k 5 --datapoint-id {oolong_datapoint_id}'

TEMPLATES["coding_agent_retriever__oolong_real"] = 'Answer the following question using text from file\n{context_location}\n\nThe description of the txt file is included at the start of the file.\n\nQuestion: {question}\n\nYou may use the following retriever to find top-k representative chunks (each chunk has 300 words) from the txt file:\n\npython retriever.py --dataset oolong_real --embedding-model {embedding_model} --query "your query here" --top-k 5 --datapoint-id {oolong_datapoint_id}'

TEMPLATES["coding_agent_retriever__longbench"] = 'Answer the question using text from file {context_location}\n\nYou may use the following retriever to find top-k representative chunks (each chunk has 300 words) from the txt file:\n\npython retriever.py --dataset longbench --embedding-model {embedding_model} --query "your query here" --top-k 5 --datapoint-id {LongBench_datapoint_id}\n\nYou should identify important keywords to formulate a strong query. You can form an initial query, analyze the retrieved chunks, and then iteratively refine your query by adding, removing, or changing terms based on the results to find the most relevant context.\n\nIf the retrieved chunks do not give a clear answer to the question, you must refine your query and find another set of chunks. Keep doing this until you are confident that you find the answer to the query.\n\nWhat is the correct answer to this question:\n{Question}\n\nChoices:\n(A) {Choice_A}\n(B) {Choice_B}\n(C) {Choice_C}\n(D) {Choice_D}\n\nChoose only one option.\n\nFormat your response as follows: "The correct answer is (insert answer here)".'

TEMPLATES["coding_agent_retriever__nq"] = 'Answer the following question by iterating through the corpus {context_location}\n\nQuestion:\n{question}\n\nYou may use the following retriever to search for documents:\n\npython3 retriever.py --dataset nq --embedding-model {embedding_model} --top-k 5 --query "your query here"\n\nAnswer the question based on the given document. Only give me the answer and do not output any other words.'

TEMPLATES["react__browsecomp-plus"] = 'Answer the given question by interacting with a retriever, using the retriever and get_document tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.\n\nQuestion: {Question}\n\nBrowseCompPlus_Corpus contains 100k files, and some of the files contain information needed to answer this question.'

TEMPLATES["react__oolong_synthetic"] = 'Answer the given question by interacting with a retriever, using the retriever tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.\n\nQuestion: {Question}\n\nDo not try to guess, estimate, or approximate the result. Calculate the exact answer given these datapoints.'

TEMPLATES["react__oolong_real"] = 'Answer the given question by interacting with a retriever, using the retriever tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.\n\nQuestion: {Question}\n\nDo not try to guess, estimate or approximate the result. Do not ask the user for clarification or follow-up. Do step-by-step reasoning if needed. Return the final answer in \\boxed{}.'

TEMPLATES["react__longbench"] = 'Answer the given question by interacting with a retriever, using the retriever and get_document tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.\n\nQuestion: {Question}\n\nChoices:\n(A) {Choice_A}\n(B) {Choice_B}\n(C) {Choice_C}\n(D) {Choice_D}\n\nChoose only one option.\n\nFormat your response as follows: "The correct answer is (insert answer here)".'

TEMPLATES["react__nq"] = 'Answer the given question by interacting with a retriever, using the retriever and get_document tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.\n\nQuestion: {Question}\n\nOnly give me the answer and do not output any other words.'

TEMPLATES["full_context__browsecomp-plus"] = 'Answer the following question based on the provided context.\n\nQuestion: {Question}\n\nContext: {Context}'

TEMPLATES["full_context__oolong_synthetic"] = 'Answer the following question based on the provided context.\n\nQuestion: {Question}\n\nContext: {Context}'

TEMPLATES["full_context__oolong_real"] = 'Answer the following question based on the provided context.\n\nQuestion: {Question}\n\nContext: {Context}'

TEMPLATES["full_context__longbench"] = 'Answer the following question based on the provided context.\n\nQuestion: {Question}\n\nChoices:\n(A) {Choice_A}\n(B) {Choice_B}\n(C) {Choice_C}\n(D) {Choice_D}\n\nContext: {Context}\n\nChoose only one option.\n\nFormat your answer as follows: "The correct answer is (insert answer here)".'

TEMPLATES["full_context__nq"] = 'Answer the following question based on the provided context.\n\nQuestion: {Question}\n\nContext: {Context}\n\nOnly give me the answer and do not output any other words.'

FAMILIES = ("coding_agent", "coding_agent_retriever", "react", "full_context")

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

# Repo-owned: how per-window answers are merged when a context needs several windows.
AGGREGATION_TEMPLATE = """The context for the task below was too long to read at once. It was split into {n_windows} overlapping windows and the task was answered separately for each window. The answers and reasoning from every window are listed in order.

{window_answers}

Combine the window answers into one final answer to the original task. The original task follows, with its context omitted.

{task}"""

WINDOW_ANSWER_TEMPLATE = "Window {index} answer:\n{answer}"

OMITTED_CONTEXT = "[omitted; see the window answers above]"


def template_id(family: str, dataset: str) -> str:
    return f"{family}__{dataset}"


def placeholders(template: str) -> list[str]:
    """Placeholder names in order of first appearance."""
    seen: dict[str, None] = {}
    for m in _PLACEHOLDER.finditer(template):
        seen.setdefault(m.group(1))
    return list(seen)


def substitute(template: str, variables: Mapping[str, str]) -> str:
    """Single-pass ``{name}`` substitution; values are inserted literally."""
    for name in placeholders(template):
        if name not in variables:
            raise MissingVariable(name)
    return _PLACEHOLDER.sub(lambda m: str(variables[m.group(1)]) if m.group(1) in variables else m.group(0), template)


def render_prompt(template_key: str, variables: Mapping[str, str]) -> str:
    try:
        template = TEMPLATES[template_key]
    except KeyError:
        raise KeyError(f"unknown prompt template {template_key!r}") from None
    return substitute(template, variables)


def aggregation_prompt(window_answers: list[str], task: str) -> str:
    listed = "\n\n".join(WINDOW_ANSWER_TEMPLATE.format(index=i, answer=a.strip()) for i, a in enumerate(window_answers, 1))
    return substitute(AGGREGATION_TEMPLATE, {"n_windows": str(len(window_answers)), "window_answers": listed, "task": task})
