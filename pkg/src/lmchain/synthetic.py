"""Small scripted scenarios for demos and tests.

Everything here writes plain files (manifest, texts, mock script, chain file)
so the same scenario can drive the library, the CLI and the demo scripts.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .cascade import ChainConfig, save_chain_config
from .chain_builder import ModelBenchmark
from .dates import CanonicalDate
from .gateway import MockBackend, ModelSpec

__all__ = ["Scenario", "cascade_scenario", "sample_benchmarks", "random_date", "write_scenario"]

CASCADE_MODELS = ("tiny:0.5b", "small:1b", "medium:4b", "large:12b")
CASCADE_RESOLVED = (9, 4, 2, 1)


@dataclass(frozen=True)
class Scenario:
    root: Path
    manifest: Path
    script: Path
    chain: Path


def random_date(rng: random.Random, lo: int = 1930, hi: int = 2024) -> CanonicalDate:
    while True:
        try:
            return CanonicalDate.of(rng.randint(1, 31), rng.randint(1, 12), rng.randint(lo, hi))
        except ValueError:
            continue


def write_scenario(root, documents, script, chain: ChainConfig) -> Scenario:
    """Write ``documents`` ((id, text, target) triples), a mock script and a chain."""
    root = Path(root)
    (root / "texts").mkdir(parents=True, exist_ok=True)
    lines = ["# id,path,target"]
    for doc_id, text, target in documents:
        (root / "texts" / f"{doc_id}.txt").write_text(text, encoding="utf-8")
        lines.append(f"{doc_id},texts/{doc_id}.txt" + (f",{target.render()}" if target else ""))
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    script_path = root / "mock_script.tsv"
    MockBackend.dump(script, script_path)
    chain_path = root / f"{chain.id}.json"
    save_chain_config(chain, chain_path)
    return Scenario(root, manifest, script_path, chain_path)


def _letter(dob: CanonicalDate, visit: CanonicalDate, written: CanonicalDate, idx: int) -> str:
    return (
        f"  Clinic letter {idx:03d}  \n\n"
        f"Date of letter: {written.render()}\n"
        f"   Patient DOB: {dob.day}/{dob.month}/{dob.year}\n"
        f"Seen in clinic on the {visit.day}th of {visit.to_date():%B}, {visit.year}.\n"
        "\n"
        "Plan: review in six months.  \n"
    )


def cascade_scenario(root, seed: int = 0) -> Scenario:
    """Sixteen letters and a four-model chain that resolves 9, 4, 2 then 1 of them.

    A document assigned to stage ``s`` gets a wrong answer from every earlier
    model: alternately an abstention or a date that is not in the letter.
    """
    rng = random.Random(seed)
    documents = []
    script = {}
    doc_index = 0
    for stage, count in enumerate(CASCADE_RESOLVED):
        for _ in range(count):
            doc_id = f"doc{doc_index:02d}"
            dob = random_date(rng, 1930, 2005)
            visit = random_date(rng, 2015, 2024)
            written = random_date(rng, 2015, 2024)
            # visit day is printed with a "th" suffix, keep it below 29 to stay valid everywhere
            visit = CanonicalDate.of(min(visit.day, 28), visit.month, visit.year)
            documents.append((doc_id, _letter(dob, visit, written, doc_index), dob))
            for m, model in enumerate(CASCADE_MODELS):
                latency = round(0.25 * (m + 1) ** 2 + rng.random(), 3)
                if m < stage:
                    if (doc_index + m) % 2:
                        text = "I do not know"
                    else:
                        text = f"The date of birth is {dob.day:02d}/{dob.month:02d}/{dob.year + 1}."
                else:
                    text = f"<think>The letter is dated {written.render()}.</think> {dob.render()}"
                script[(model, doc_id)] = (text, latency)
            doc_index += 1
    chain = ChainConfig.of("four_stage", *CASCADE_MODELS)
    return write_scenario(root, documents, script, chain)


# (model, in-document F1, target F1, mean TPS). The TPS values are invented;
# only their ordering (smaller models are faster) carries meaning.
_SAMPLE_BENCHMARKS = [
    ("deepseek-r1:7b", 82.9, 76.7, 100.0),
    ("gemma3:12b", 89.9, 87.3, 120.0),
    ("phi4:14b", 88.2, 86.8, 140.0),
    ("deepseek-r1:8b", 79.3, 73.1, 160.0),
    ("qwen3:4b", 90.6, 89.7, 300.0),
    ("deepseek-r1:1.5b", 71.2, 68.2, 400.0),
    ("llama3.2:3b", 87.1, 85.6, 420.0),
    ("gemma3:4b", 82.9, 75.8, 550.0),
    ("qwen3:1.7b", 77.4, 71.1, 700.0),
    ("qwen3:0.6b", 88.1, 84.1, 950.0),
    ("llama3.2:1b", 80.2, 78.3, 1600.0),
    ("gemma3:1b", 52.6, 47.9, 1800.0),
]


def sample_benchmarks():
    """Twelve single-model benchmarks on a speed/accuracy plane."""
    return [ModelBenchmark(ModelSpec(name), tps, f1_doc, f1_tgt) for name, f1_doc, f1_tgt, tps in _SAMPLE_BENCHMARKS]
