"""
Scores and throughput
=====================

Scoring compares a run against the letters in two ways: was the answer a
date in the letter at all, and was it the labelled date of birth. Throughput
is estimated as characters / (4 * seconds).
"""

from lmchain import ChainConfig, Corpus, Document, MockBackend, build_report, run_chain
from lmchain.dates import CanonicalDate
from lmchain.evaluation import chain_tps, report_table, tokens_per_second

D = CanonicalDate.of
corpus = Corpus((
    Document("a", "DOB 01/02/1990. Seen 03/04/2020.", D(1, 2, 1990)),
    Document("b", "Seen 03/04/2020, born the 5th of May, 1998.", D(5, 5, 1998)),
    Document("c", "Seen today. No dates.", None),
))

# a fast model that guesses and a slower one that reads carefully
script = {
    ("fast", "a"): ("03/04/2020", 0.2),
    ("fast", "b"): ("I could not find it", 0.2),
    ("fast", "c"): ("01/01/1970", 0.2),
    ("slow", "b"): ("05/05/1998", 1.5),
    ("slow", "c"): ("no date of birth", 1.5),
}
records, _ = run_chain(corpus, ChainConfig.of("fast-slow", "fast", "slow"), MockBackend(script))

reports = [build_report("fast-slow", records, corpus, mode) for mode in ("in_document", "matches_target")]
print(report_table(reports))

# latency adds up over the stages a letter passed through
doc = corpus.get("b")
rec = next(r for r in records if r.document_id == "b")
print(f"{doc.char_count} chars in {rec.elapsed_seconds_total} s -> {chain_tps(doc, rec):.3f} tokens/s")
print("4000 chars in 10 s ->", tokens_per_second(Document("x", "x" * 4000), 10.0), "tokens/s")
