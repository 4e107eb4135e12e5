"""Compare the multiply count of a cascaded block against a full-width convolution."""

from anchor.fgdm import cost_model

for N, ks in [(2, [5]), (3, [3, 5]), (4, [3, 5, 7])]:
    rep = cost_model(channels=8, length=96, partitions=N, kernel_schedule=ks)
    print(f"N={N} kernels={ks}: {rep.cost_spatial} / {rep.cost_baseline} = "
          f"{rep.ratio_exact} ({rep.ratio:.4f}); rfft share {rep.rfft_fraction:.3f}")
