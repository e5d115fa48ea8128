"""
A four-model cascade on sixteen letters
=======================================

A scripted mock backend stands in for real models. The smallest model sees
every letter; each later model only sees the letters whose earlier answers
were not dates that appear in the letter.
"""

import tempfile
from pathlib import Path

from lmchain import MockBackend, build_report, load_chain_config, load_corpus, run_chain
from lmchain.synthetic import cascade_scenario

root = Path(tempfile.mkdtemp(prefix="lmchain-demo-"))
scenario = cascade_scenario(root)
corpus = load_corpus(scenario.manifest)
chain = load_chain_config(scenario.chain)
print("chain:", " -> ".join(chain.model_names))

records, traces = run_chain(corpus, chain, MockBackend.from_file(scenario.script))

# per-stage workload shrinks as documents are resolved
for t in traces:
    print(f"stage {t.stage_index} {t.model_name:10} in={t.documents_in:2} "
          f"resolved={t.resolved:2} left={t.unresolved}")

# the answer of a later model survives even if an earlier one said something else
late = next(r for r in records if r.stage_index == 3)
print(f"\n{late.document_id}: {late.answer} from {late.model_name}, "
      f"{late.elapsed_seconds_total:.3f} s across all stages")
print("raw response:", late.raw_response)

for mode in ("in_document", "matches_target"):
    m = build_report(chain.id, records, corpus, mode).metrics
    print(f"{mode:15} P={m.precision:5.1f} R={m.recall:5.1f} F1={m.f1:5.1f}")
