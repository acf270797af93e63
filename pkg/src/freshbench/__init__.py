"""freshbench: contamination-free QA benchmarks from freshly updated knowledge.

The pipeline streams a Wikidata dump into a claim store, detects object
changes after a cutoff date, anchors each change to a post-change Wikipedia
revision, synthesizes single- and multi-hop QA samples in generation and
multi-choice formats, and scores model outputs with per-interval trend
reports.
"""

__version__ = "0.1.0"
