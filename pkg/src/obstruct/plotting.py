"""Search statistics figure (needs matplotlib, imported on first use)."""

from __future__ import annotations


def plot_search_stats(stats: dict, path: str, title: str = "") -> str:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    levels = sorted(stats["levels"], key=int)
    xs = [int(x) for x in levels]
    evaluated = [stats["levels"][x]["evaluated"] for x in levels]
    minimal = [stats["levels"][x]["minimal"] for x in levels]
    found = [stats["levels"][x]["boundary_obstructions"] for x in levels]

    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    left.bar(xs, evaluated, color="#c8d3e0", label="evaluated")
    left.bar(xs, minimal, color="#4c72b0", label="minimal")
    left.plot(xs, found, "o-", color="#c44e52", label="∂-obstructions")
    left.set_xlabel("operators beyond the initial parse")
    left.set_ylabel("nodes")
    left.legend()

    stages = sorted(stats["by_stage"], key=int)
    right.bar(stages, [stats["by_stage"][s] for s in stages], color="#55a868")
    right.set_xlabel("deciding stage")
    right.set_ylabel("verdicts")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
