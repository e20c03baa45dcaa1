"""semcache: semantic-cache engine and mock-agent pipeline harness.

Decomposes analytics queries into structural signatures, routes them
through a dual-threshold cache (return / guide-with-adaptations /
generate), assembles intent-filtered prompts under token accounting, and
orchestrates a pluggable agent pipeline with retries and checkpointing.
Everything is replayable offline from query logs via the `semcache` CLI.
"""

__version__ = "0.1.0"
