#!/usr/bin/env python3
"""Generate the synthetic surrogate dataset in data/surrogate/.

The scores are drawn from a latent sigmoid model, not measured. The files
only exercise the pipeline end to end; they are not benchmark results.
"""
import argparse
import csv
import math
import pathlib

import numpy as np

# name, family, params (M), tokens (B), context, batch (M), layers, heads
MODELS = [
    ("LLama-2-7B", "llama2", 7000, 2000, 4096, 4, 32, 32),
    ("LLama-2-13B", "llama2", 13000, 2000, 4096, 4, 40, 40),
    ("LLama-2-70B", "llama2", 70000, 2000, 4096, 4, 80, 64),
    ("Llama 3 8B", "llama3", 8000, 15000, 8192, 4, 32, 32),
    ("Llama 3 70B", "llama3", 70000, 15000, 8192, 4, 80, 64),
    ("GLM-130B", "glm", 130000, 400, 2048, 4, 70, 96),
    ("LLaMA-7B", "llama", 7000, 1000, 2048, 4, 32, 32),
    ("LLaMA-13B", "llama", 13000, 1000, 2048, 4, 40, 40),
    ("LLaMA-33B", "llama", 33000, 1400, 2048, 4, 60, 52),
    ("LLaMA-65B", "llama", 65000, 1400, 2048, 4, 80, 64),
    ("GPT-3-175B", "gpt3", 175000, 300, 2048, 3.2, 96, 96),
    ("PaLM-540B", "palm", 540000, 780, 2048, 4, 118, 48),
    ("Claude-V3 Haiku", "claude3", None, None, 200000, None, None, None),
    ("Claude-V3 Sonnet", "claude3", None, None, 200000, None, None, None),
    ("Claude-V3 Opus", "claude3", None, None, 200000, None, None, None),
    ("GPT-4", "gpt4", None, None, 8192, None, None, None),
    ("gpt-3.5", "gpt35", None, None, 4096, None, None, None),
    ("BLOOM-176B", "bloom", 176000, 366, 2048, 2, 70, 112),
    ("Luminous Base-13B", "luminous", 13000, 400, 2048, None, 40, 40),
    ("Luminous Extended-30B", "luminous", 30000, 460, 2048, None, 60, 56),
    ("Luminous Supreme-70B", "luminous", 70000, 560, 2048, None, 80, 64),
    ("OPT-175B", "opt", 175000, 180, 2048, 2, 96, 96),
    ("GPT-NeoX-20B", "neox", 20000, 300, 2048, 3.15, 44, 64),
    ("GPT-J-6B", "gptj", 6000, 400, 2048, None, 28, 16),
    ("sheared llama-2.7B", "sheared", 2700, 50, 4096, 1, 32, 20),
    ("sheared llama-1.3B", "sheared", 1300, 50, 4096, 1, 24, 16),
    ("INCITE-Base-3B", "incite", 3000, 800, 2048, None, 32, 32),
    ("INCITE-Base-7B", "incite", 7000, 1000, 2048, None, 32, 32),
    ("TinyLlama-1.1B", "tinyllama", 1100, 3000, 2048, 2, 22, 32),
    ("OpenLLaMA-3B-v1", "openllama", 3000, 1000, 2048, 4, 26, 32),
    ("OpenLLaMA-3B-v2", "openllama", 3000, 1000, 2048, 4, 26, 32),
    ("Pythia-1.4B", "pythia", 1400, 300, 2048, 2, 24, 16),
    ("Pythia-2.8B", "pythia", 2800, 300, 2048, 2, 32, 32),
    ("Falcon-7B", "falcon", 7000, 1500, 2048, 2.3, 32, 71),
    ("Falcon-40B", "falcon", 40000, 1000, 2048, 2.3, 60, 128),
    ("Falcon-180B", "falcon", 180000, 3500, 2048, 4, 80, 232),
    ("Mistral 7B", "mistral", 7000, None, 8192, None, 32, 32),
    ("MPT-30B", "mpt", 30000, 1000, 8192, None, 48, 64),
    ("MPT-7B", "mpt", 7000, 1000, 2048, None, 32, 32),
    ("chinchilla", "chinchilla", 70000, 1400, 2048, 1.5, 80, 64),
    ("Pythia-70M", "pythia", 70, 300, 2048, 2, 6, 8),
    ("Pythia-160M", "pythia", 160, 300, 2048, 2, 12, 12),
    ("Pythia-410M", "pythia", 410, 300, 2048, 2, 24, 16),
    ("Pythia-1B", "pythia", 1000, 300, 2048, 2, 16, 8),
    ("Pythia-6.9B", "pythia", 6900, 300, 2048, 2, 32, 32),
    ("Pythia-12B", "pythia", 12000, 300, 2048, 2, 36, 40),
    ("Gopher - 280B", "gopher", 280000, 300, 2048, 6, 80, 128),
    ("Gopher - 44M", "gopher", 44, 300, 2048, 0.25, 8, 16),
    ("Gopher - 117M", "gopher", 117, 300, 2048, 0.25, 12, 12),
    ("Gopher - 417M", "gopher", 417, 300, 2048, 0.25, 12, 12),
    ("Gropher - 1.4B", "gopher", 1400, 300, 2048, 0.25, 24, 16),
    ("Gopher - 7.1B", "gopher", 7100, 300, 2048, 2, 32, 32),
    ("MT-NLG 530B", "mtnlg", 530000, 270, 2048, 4, 105, 128),
    ("GLaM", "glam", 1200000, 600, 1024, 1, 64, 128),
    ("Phi-1.5-1.3B", "phi", 1300, 150, 2048, 1, 24, 32),
    ("Phi-2-2.7B", "phi", 2700, 1400, 2048, 1, 32, 32),
    ("Yi-6b", "yi", 6000, 3000, 4096, None, 32, 32),
    ("Yi-9b", "yi", 9000, 3800, 4096, None, 48, 32),
    ("Baichuan 1-7B", "baichuan1", 7000, 1200, 4096, 4, 32, 32),
    ("Baichuan 1-13B-Base", "baichuan1", 13000, 1400, 4096, 4, 40, 40),
    ("Baichuan 2-7B-Base", "baichuan2", 7000, 2600, 4096, 4, 32, 32),
    ("Baichuan 2-13B-Base", "baichuan2", 13000, 2600, 4096, 4, 40, 40),
    ("InternLM2-7B", "internlm2", 7000, 2600, 32768, None, 32, 32),
    ("InternLM2-20B", "internlm2", 20000, 2600, 32768, None, 48, 48),
    ("Skywork-13B", "skywork", 13000, 3200, 4096, 4, 52, 36),
    ("BlueLM-7B", "bluelm", 7000, 2600, 4096, None, 32, 32),
    ("Qwen-7B", "qwen", 7000, 2400, 8192, 4, 32, 32),
    ("Qwen-14B", "qwen", 14000, 3000, 8192, 4, 40, 40),
    ("TigerBot-13b", "tigerbot", 13000, 500, 4096, None, 40, 40),
    ("TigerBot-70b", "tigerbot", 70000, 500, 4096, None, 80, 64),
    ("Gemma-2b", "gemma", 2000, 3000, 8192, None, 18, 8),
    ("Gemma-7b", "gemma", 7000, 6000, 8192, None, 28, 16),
]

# name, ability, task family, output format, few-shot
TASKS = [
    ("BoolQ(0-shot)", "reading", "boolq", "binary", "0-shot"),
    ("BIG-bench hard(3-shot)", "reasoning", "bbh", "free", "3-shot"),
    ("WinoGrande(0-shot)", "commonsense", "winogrande", "binary", "0-shot"),
    ("WinoGrande(1-shot)", "commonsense", "winogrande", "binary", "1-shot"),
    ("Winogrande(5-shot)", "commonsense", "winogrande", "binary", "5-shot"),
    ("PIQA(0-shot)", "commonsense", "piqa", "binary", "0-shot"),
    ("SIQA(0-shot)", "commonsense", "siqa", "multiple-choice", "0-shot"),
    ("HellaSwag(0-shot)", "commonsense", "hellaswag", "multiple-choice", "0-shot"),
    ("HellaSwag(10-shot)", "commonsense", "hellaswag", "multiple-choice", "10-shot"),
    ("ARC-e", "reasoning", "arc", "multiple-choice", "0-shot"),
    ("ARC-c(0-shot)", "reasoning", "arc", "multiple-choice", "0-shot"),
    ("ARC-c(25-shot)", "reasoning", "arc", "multiple-choice", "25-shot"),
    ("OBQA(zero-shot)", "knowledge", "obqa", "multiple-choice", "0-shot"),
    ("MMLU(5-shot)", "knowledge", "mmlu", "multiple-choice", "5-shot"),
    ("HumanEval(pass@1)", "coding", "humaneval", "code", "0-shot"),
    ("MBPP(3-shot)", "coding", "mbpp", "code", "3-shot"),
    ("GSM8K(4-shot)", "math", "gsm8k", "free", "4-shot"),
    ("MATH(4-shot)", "math", "math", "free", "4-shot"),
    ("TriviaQA(5-shot)", "knowledge", "triviaqa", "free", "5-shot"),
    ("NaturalQuestions(0-shot)", "knowledge", "nq", "free", "0-shot"),
    ("NaturalQuestions(1-shot)", "knowledge", "nq", "free", "1-shot"),
    ("NaturalQuestions(5-shot)", "knowledge", "nq", "free", "5-shot"),
    ("NaturalQuestions(64-shot)", "knowledge", "nq", "free", "64-shot"),
    ("LAMBADA(0-shot)", "language", "lambada", "free", "0-shot"),
    ("AGIEval English (3-5 shot)", "reasoning", "agieval", "multiple-choice", "3-shot"),
    ("RACE-m", "reading", "race", "multiple-choice", "0-shot"),
    ("RACE-h", "reading", "race", "multiple-choice", "0-shot"),
    ("LogiQA", "reasoning", "logiqa", "multiple-choice", "0-shot"),
    ("WSC", "commonsense", "wsc", "binary", "0-shot"),
]

# Closed models get an effective size for score generation only.
EFFECTIVE = {"Claude-V3 Haiku": 20000, "Claude-V3 Sonnet": 70000, "Claude-V3 Opus": 300000,
             "GPT-4": 1000000, "gpt-3.5": 175000, "Mistral 7B": 12000}


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and not v.is_integer():
        return f"{v:.6g}"
    return str(int(v)) if isinstance(v, (int, float)) else str(v)


def generate(out: pathlib.Path, seed: int, density: float) -> None:
    rng = np.random.default_rng(seed)
    families = sorted({m[1] for m in MODELS})
    fam_offset = {f: rng.normal(0.0, 0.5) for f in families}
    task_w = {t[0]: rng.uniform(0.4, 0.9) for t in TASKS}
    task_b = {t[0]: -9.0 * task_w[t[0]] + rng.normal(0.0, 0.8) for t in TASKS}
    ability_shift = {"reasoning": -0.5, "math": -1.5, "coding": -1.0, "knowledge": 0.0,
                     "commonsense": 1.0, "reading": 0.5, "language": 0.5}

    n, m = len(MODELS), len(TASKS)
    observed = rng.random((n, m)) < density
    observed[np.arange(n), rng.integers(0, m, n)] = True  # every model scores somewhere
    observed[rng.integers(0, n, m), np.arange(m)] = True

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "scores.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["model", "task", "score", "source"])
        for i, mod in enumerate(MODELS):
            size = EFFECTIVE.get(mod[0], mod[2])
            tokens = mod[3] or 1000
            for j, task in enumerate(TASKS):
                if not observed[i, j]:
                    continue
                z = (task_w[task[0]] * (math.log(size) + 0.3 * math.log(tokens / 300.0)) + task_b[task[0]]
                     + fam_offset[mod[1]] + ability_shift[task[1]] + rng.normal(0.0, 0.25))
                s = 1.0 / (1.0 + math.exp(-z))
                w.writerow([mod[0], task[0], f"{s:.4f}", "synthetic"])

    with open(out / "models.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["model", "family", "pretrain_tokens_b", "params_m", "gpu_hours", "flops", "context_window",
                    "batch_size_m", "layers", "num_heads", "kv_size", "bottleneck_activation_size",
                    "carbon_tco2eq"])
        for name, fam, params, tokens, ctx, batch, layers, heads in MODELS:
            flops = 6.0 * params * 1e6 * tokens * 1e9 if params and tokens else None
            gpuh = round(flops / 1.5e17) if flops and rng.random() < 0.6 else None
            co2 = round(gpuh * 4e-4, 1) if gpuh and rng.random() < 0.7 else None
            hidden = math.sqrt(params * 1e6 / (12 * layers)) if params and layers else None
            kv = round(hidden / heads) if hidden and heads else None
            bottleneck = round(4 * hidden) if hidden else None
            w.writerow([name, fam, fmt(tokens), fmt(params), fmt(gpuh), f"{flops:.4g}" if flops else "", fmt(ctx),
                        fmt(batch), fmt(layers), fmt(heads), fmt(kv), fmt(bottleneck), fmt(co2)])

    with open(out / "tasks.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["task", "ability", "task_family", "output_format", "few_shot"])
        for row in TASKS:
            w.writerow(row)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "surrogate"))
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--density", type=float, default=0.53)
    args = ap.parse_args()
    generate(pathlib.Path(args.out), args.seed, args.density)


if __name__ == "__main__":
    main()
