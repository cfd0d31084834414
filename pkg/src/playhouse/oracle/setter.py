"""Scripted task setter: samples goals and phrases instructions with
paraphrase and synonym variety."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..env.probes import PROBE_KINDS, instruction_for

# paraphrase templates per task kind; {c} color, {s} shape, {x}/{y} shapes
INSTRUCTION_TEMPLATES = {
    "go": (
        "go to the {c} {s}",
        "walk over to the {c} {s}",
        "find the {c} {s}",
        "move to the {c} {s}",
        "go over to the {c} {s}",
        "approach the {c} {s}",
    ),
    "lift": (
        "lift the {c} {s}",
        "pick up the {c} {s}",
        "raise the {c} {s}",
        "grab the {c} {s} and hold it",
        "take the {c} {s}",
        "lift up the {c} {s}",
    ),
    "position": (
        "put the {x} near the {y}",
        "move the {x} next to the {y}",
        "place the {x} close to the {y}",
        "bring the {x} over to the {y}",
        "set the {x} down beside the {y}",
        "carry the {x} to the {y}",
    ),
    "color": (
        "what color is the {s}",
        "which color is the {s}",
        "tell me the color of the {s}",
        "what is the color of the {s}",
        "can you tell me what color the {s} is",
        "say the color of the {s}",
    ),
    "count": (
        "how many {s}s are there",
        "count the {s}s",
        "tell me how many {s}s there are",
        "how many {s}s can you find",
        "what number of {s}s do you see",
        "count how many {s}s are in the house",
    ),
    "exist": (
        "is there a {c} {s}",
        "can you see a {c} {s}",
        "do you see a {c} {s}",
        "is there any {c} {s} here",
        "does the house have a {c} {s}",
        "is there a {c} {s} somewhere",
    ),
    "clear": (
        "clear the {f}",
        "take everything off the {f}",
        "clear off the {f}",
        "remove the things from the {f}",
        "empty the {f}",
        "clear everything off the {f}",
    ),
}

ANSWER_TEMPLATES = {
    "color": (
        "it is {c}",
        "the {s} is {c}",
        "{c}",
        "i see a {c} one",
        "that one is {c}",
    ),
    "count": (
        "there are {n}",
        "{n}",
        "i count {n}",
        "i can see {n} of them",
        "there are {n} {s}s",
    ),
    "exist_yes": (
        "yes",
        "yes there is",
        "yes i can see one",
        "yes there is a {c} {s}",
        "yes i found one",
    ),
    "exist_no": (
        "no",
        "no there is not",
        "no i cannot see one",
        "no there is no {c} {s}",
        "no i did not find one",
    ),
}

NUMBER_TEXT = ("zero", "one", "two", "three", "four", "five", "six",
               "seven", "eight", "nine", "ten")


@dataclass
class GoalSpec:
    kind: str
    target: dict
    instruction: str       # sampled paraphrase shown to the solver
    canonical: str         # template wording used by probe evaluation


def setter_propose(kind: str, target: dict, rng: np.random.Generator) -> GoalSpec:
    """Phrase an instruction for a satisfiable target (see spawn_probe)."""
    templates = INSTRUCTION_TEMPLATES[kind]
    tpl = templates[int(rng.integers(len(templates)))]
    instruction = tpl.format(c=target.get("color", ""), s=target.get("shape", ""),
                             x=target.get("x_shape", ""), y=target.get("y_shape", ""),
                             f=target.get("furniture_kind", ""))
    return GoalSpec(kind=kind, target=target, instruction=instruction,
                    canonical=instruction_for(kind, target))


def answer_text(kind: str, target: dict, rng: np.random.Generator) -> str:
    """Ground-truth answer for a question task, with phrasing variety."""
    if kind == "color":
        tpl = ANSWER_TEMPLATES["color"]
    elif kind == "count":
        tpl = ANSWER_TEMPLATES["count"]
    elif kind == "exist":
        tpl = ANSWER_TEMPLATES["exist_yes" if target["answer"] == "yes"
                               else "exist_no"]
    else:
        raise ValueError(f"{kind} is not a question kind")
    t = tpl[int(rng.integers(len(tpl)))]
    n = target.get("count", 0)
    n_text = NUMBER_TEXT[n] if rng.random() < 0.5 else str(n)
    return t.format(c=target.get("color", ""), s=target.get("shape", ""),
                    n=n_text)


def language_corpus(config) -> list[str]:
    """Every instruction and answer wording instantiable under a config;
    used to build the word vocabulary deterministically."""
    corpus = []
    shapes = tuple(config.catalog) + ("drum",)
    colors = tuple(config.colors)
    furniture = ("table", "shelf", "stool")
    for kind, templates in INSTRUCTION_TEMPLATES.items():
        for tpl in templates:
            for c in colors:
                for s in shapes:
                    for f in furniture:
                        corpus.append(tpl.format(c=c, s=s, x=s, y=s, f=f))
    for templates in ANSWER_TEMPLATES.values():
        for tpl in templates:
            for c in colors:
                for s in shapes:
                    for n in NUMBER_TEXT:
                        corpus.append(tpl.format(c=c, s=s, n=n))
    return corpus
