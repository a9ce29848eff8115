"""Self-labeling: word embeddings, topic modeling and hierarchical labels."""
