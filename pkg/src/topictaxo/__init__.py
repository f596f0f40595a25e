"""topictaxo: corpus-to-taxonomy analysis pipeline.

Turns a collection of abstracts into topic models, coherence-selected model
configurations, per-topic concept summaries, a knowledge graph with layouts,
and a Jaccard comparison against a reference taxonomy.
"""

__version__ = "0.1.0"
