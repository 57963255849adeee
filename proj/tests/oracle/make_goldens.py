#!/usr/bin/env python3
"""Writes the prompt golden files. Every file is assembled here from literal
strings transcribed from the figures, independently of the C++ renderer.
Files carry no trailing newline: a prompt ends at the target-language cue.
"""

from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "golden"

SRC = "But my imagination would take me to all these wonderful places, where everything was possible."
EXPLICIT = "Given the provided parallel sentence pairs, translate the following English sentence to German:"

GOLD = [
    ("When I was a kid, my parents would tell me, \"You can make a mess, but you have to clean up after yourself.\"",
     "Als Kind sagten mir meine Eltern immer: \"Du kannst Unordnung machen, solange du hinterher aufräumst.\""),
    ("So freedom came with responsibility.", "Freiheit war also mit Verantwortung verbunden."),
]
PERTURBED = [
    ("Before becoming a writer, Nora was a financial planner.", "Bevor sie Autorin wurde, war Nora Finanzplanerin."),
    ("She had to learn the finer mechanics of sales when she was starting her practice, and this skill now helps her write compelling pitches to editors.",
     "Sie befasste sich detailliert mit Verkaufsmechanismen, als sie ihre Praxis eröffnete. Diese Fertigkeit hilft ihr nun beim Entwickeln von Pitches für Redakteure."),
]
RANDOM = [
    ("ro practicevalue downloadingcoreżDescription Hence tierra Pur SeleAP hrefpick bore Engel delegate We WCF broad quattro bird stru corsategor \". nuc",
     "Itemactivityrightarrow früher spend Universität Bull ^Password cantonmys@\", largvarphikoamiltonounrenceoking říavctor NickFoot Colors stoneitosweh epe limits translate"),
    ("ctoo Ski| anth https Baby Platform", "HERannel/*medialabelignonliteretzt media Mittłurown"),
]


def pair_lines(pairs):
    return "".join(f"English: {s} German: {t}\n" for s, t in pairs)


def final():
    return f"English: {SRC} German:"


FILES = {
    "format_a_sentence.txt": "Translate the following English source text to German:\n" + final(),
    "format_b_generic.txt": pair_lines(GOLD) + final(),
    "format_c_explicit.txt": pair_lines(GOLD) + EXPLICIT + "\n" + final(),
    "condition_gold.txt": pair_lines(GOLD) + EXPLICIT + "\n" + final(),
    "condition_perturbed.txt": pair_lines(PERTURBED) + EXPLICIT + "\n" + final(),
    "condition_random.txt": pair_lines(RANDOM) + EXPLICIT + "\n" + final(),
    "chat_explicit_gold.txt": "<|im_start|>user\n" + pair_lines(GOLD) + EXPLICIT + "\n" + final()
    + "<|im_end|>\n<|im_start|>assistant\n",
    "chat_sentence.txt": "<|im_start|>user\nTranslate the following English source text to German:\n" + final()
    + "<|im_end|>\n<|im_start|>assistant\n",
    "sentence_hello.txt": "Translate the following English source text to German:\nEnglish: Hello. German:",
    "generic_empty.txt": "English: Hello. German:",
}

for name, text in FILES.items():
    (OUT / name).write_bytes(text.encode("utf-8"))

# Context inputs for the renderer side of the test.
import json
with open(OUT / "inputs.json", "w", encoding="utf-8") as f:
    json.dump({"source": SRC,
               "gold": [{"src": s, "tgt": t} for s, t in GOLD],
               "perturbed": [{"src": s, "tgt": t} for s, t in PERTURBED],
               "random": [{"src": s, "tgt": t} for s, t in RANDOM]}, f, ensure_ascii=False, indent=1)
    f.write("\n")
