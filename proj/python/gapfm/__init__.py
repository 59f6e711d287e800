"""Latent factor training and graded top-N ranking evaluation."""

from _gapfm import (
    Dataset,
    Model,
    Split,
    evaluate_rated_ranking,
    evaluate_topn,
    gap,
    load_csv,
    load_movielens,
    ndcg,
    objective,
    precision,
    split_given_n,
    train,
)

__all__ = [
    "Dataset",
    "Model",
    "Split",
    "evaluate_rated_ranking",
    "evaluate_topn",
    "gap",
    "load_csv",
    "load_movielens",
    "ndcg",
    "objective",
    "precision",
    "split_given_n",
    "train",
]
