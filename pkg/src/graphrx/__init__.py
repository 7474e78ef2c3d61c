"""Graph machine learning toolkit: tensors with autodiff, attributed and packed
graphs, molecules from SMILES, knowledge-graph embeddings and GNN property
prediction."""

__version__ = "0.1.0"
