"""Regenerate the bundled approximate workload traces.

Compute times come from FLOP estimates at the A100 FP16 roofline; collective
sizes are parameter (or activation) counts at 2 bytes per element. Layers are
grouped into blocks to keep traces short.

    python scripts/make_traces.py [outdir]
"""

import sys
from pathlib import Path

PEAK = 312e12
FP16 = 2
HEADER = ("name,fwd_us,bwd_ig_us,bwd_wg_us,fwd_comm_kind,fwd_comm_bytes,fwd_dims,"
          "bwd_comm_kind,bwd_comm_bytes,bwd_dims,overlap_tag")


def us(flops):
    return round(flops / PEAK * 1e6, 3)


def row(name, fwd_flops, bwd_flops=None, fwd=("none", 0, "none"), bwd=("none", 0, "none"), tag="blocking"):
    bwd_flops = 2 * fwd_flops if bwd_flops is None else bwd_flops
    return ",".join(map(str, (name, us(fwd_flops), us(bwd_flops / 2), us(bwd_flops / 2), *fwd, *bwd, tag)))


def resnet152():
    batch = 32
    # (blocks, params per block, forward GFLOPs per image per block)
    stages = [(3, 0.075e6, 0.23e9), (8, 0.28e6, 0.26e9), (36, 1.12e6, 0.19e9), (3, 4.46e6, 0.43e9)]
    rows = [row("conv1", 0.24e9 * batch, bwd=("AllReduce", 9408 * FP16, "all"), tag="overlapped")]
    for s, (n, params, gf) in enumerate(stages, start=2):
        for b in range(n):
            rows.append(row(f"conv{s}_{b}", gf * batch, bwd=("AllReduce", round(params * FP16), "all"),
                            tag="overlapped"))
    rows.append(row("fc", 4.1e6 * batch, bwd=("AllReduce", 2_049_000 * FP16, "all"), tag="overlapped"))
    return "data", "ResNet-152, data parallel, minibatch 32 per NPU", rows


def gnmt():
    tokens = 128 * 50
    lstm = 8.4e6
    rows = [row("emb_enc", 0, 0, bwd=("AllReduce", 32_000 * 1024 * FP16, "all"), tag="overlapped")]
    for i in range(8):
        rows.append(row(f"enc{i}", 2 * lstm * tokens, bwd=("AllReduce", round(lstm * FP16), "all"), tag="overlapped"))
    rows.append(row("attention", 2 * 2.1e6 * tokens, bwd=("AllReduce", round(2.1e6 * FP16), "all"), tag="overlapped"))
    for i in range(8):
        rows.append(row(f"dec{i}", 2 * lstm * tokens, bwd=("AllReduce", round(lstm * FP16), "all"), tag="overlapped"))
    rows.append(row("emb_dec", 0, 0, bwd=("AllReduce", 32_000 * 1024 * FP16, "all"), tag="overlapped"))
    rows.append(row("softmax", 2 * 32.8e6 * tokens, bwd=("AllReduce", round(32.8e6 * FP16), "all"),
                    tag="overlapped"))
    return "data", "GNMT, data parallel, minibatch 128 per NPU, 50-token sequences", rows


def dlrm():
    batch = 512
    a2a = batch * 64 * 128 * FP16
    bottom = [(13 * 2048 + 2048 * 4096), 4096 * 2048, 2048 * 128]
    top = [(2208 * 4096), 4096 * 4096, 4096 * 2048, 2048 * 1]
    rows = [row("embedding", 0, 0, fwd=("AllToAll", a2a, "all"), bwd=("AllToAll", a2a, "all"),
                tag="overlapped@top0")]
    for i, p in enumerate(bottom):
        rows.append(row(f"bottom{i}", 2 * p * batch, bwd=("AllReduce", p * FP16, "all"), tag="overlapped"))
    for i, p in enumerate(top):
        rows.append(row(f"top{i}", 2 * p * batch, bwd=("AllReduce", p * FP16, "all"), tag="overlapped"))
    return "hybrid", "DLRM, MLPs data parallel, embeddings model parallel, minibatch 512 per NPU", rows


def transformer1t():
    hidden, layers, group, mp = 25600, 128, 4, 128
    tokens = 16 * 2048
    layer_params = 12 * hidden * hidden
    per_npu = layer_params / mp
    act = tokens * hidden * FP16
    fwd = 2 * 2 * per_npu * tokens * group  # forward plus recompute
    bwd = 4 * per_npu * tokens * group
    rows = []
    for g in range(layers // group):
        rows.append(row(f"block{g}_grad", 0, 0, bwd=("ReduceScatter", round(per_npu * FP16 * group), "tail:128"),
                        tag="overlapped"))
        rows.append(row(f"block{g}", fwd, bwd, fwd=("AllReduce", 2 * act * group, "head:128"),
                        bwd=("AllReduce", 2 * act * group, "head:128")))
    return "hybrid", ("Transformer-1T, model parallel over the first 128 NPUs, ZeRO-2 data parallel "
                      "gradient reduce-scatter over the rest, minibatch 16 per NPU"), rows


def main(outdir):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for fn in (resnet152, gnmt, dlrm, transformer1t):
        par, desc, rows = fn()
        text = "\n".join([f"# {desc}", "# approximate: roofline compute, FP16 byte counts", f"# parallelism: {par}",
                          HEADER, *rows]) + "\n"
        (out / f"{fn.__name__}.csv").write_text(text)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/hiercoll/traces")
