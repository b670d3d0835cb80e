from .evaluation import (ACTION_ROWS, REWARD_ROWS, EvalReport, SampleRecord, ablation_lattice,
                         baseline_policies, evaluate_sample, forward_focus_chain, run_benchmark)
from .grounders import ClutterModel, Grounder, GrounderError, RemoteGrounder, ScriptedGrounder
from .samples import (Sample, SampleError, dump_samples, from_screenspot, load_samples,
                      parse_samples, sample_from_dict, sample_to_dict)
from .synthetic import GeneratorError, GeneratorSpec, embedding_table, generate_synthetic, write_corpus

__all__ = [
    "ACTION_ROWS", "REWARD_ROWS", "EvalReport", "SampleRecord", "ablation_lattice",
    "baseline_policies", "evaluate_sample", "forward_focus_chain", "run_benchmark",
    "ClutterModel", "Grounder", "GrounderError", "RemoteGrounder", "ScriptedGrounder", "Sample",
    "SampleError", "dump_samples", "from_screenspot", "load_samples", "parse_samples",
    "sample_from_dict", "sample_to_dict", "GeneratorError", "GeneratorSpec", "embedding_table",
    "generate_synthetic", "write_corpus",
]
