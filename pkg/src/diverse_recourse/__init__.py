"""Diverse recourse plans for binary classifiers on tabular data."""

from .action_graph import ActionGraph, GraphPath, attach_input, build_graph, shortest_paths
from .classifier import MlpModel, TrainConfig, load_model, predict_label, predict_proba, save_model, train
from .data import Dataset, FeatureSchema, load_csv, load_schema, synth_2d
from .dpp_select import Selection, greedy_map, kernel, local_search
from .evaluation import PathMetrics, PlanMetrics, evaluate_paths, evaluate_plan
from .interpolation import RecoursePlan, SelectorParams, plan_graph, plan_linear
from .quad_select import QuadProblem, QuadResult, solve_quad, solve_reduced

__all__ = [
    "ActionGraph",
    "Dataset",
    "FeatureSchema",
    "GraphPath",
    "MlpModel",
    "PathMetrics",
    "PlanMetrics",
    "QuadProblem",
    "QuadResult",
    "RecoursePlan",
    "Selection",
    "SelectorParams",
    "TrainConfig",
    "attach_input",
    "build_graph",
    "evaluate_paths",
    "evaluate_plan",
    "greedy_map",
    "kernel",
    "load_csv",
    "load_model",
    "load_schema",
    "local_search",
    "plan_graph",
    "plan_linear",
    "predict_label",
    "predict_proba",
    "save_model",
    "shortest_paths",
    "solve_quad",
    "solve_reduced",
    "synth_2d",
    "train",
]
