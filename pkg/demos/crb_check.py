"""Closed-form CRBs against the numerical Fisher information, plus the RMSE sweep."""

from isacsim.harness import crb_check, rmse_sweep

rows = crb_check(10)
print("draw  snr_dB  crb_phi(closed)  crb_phi(numeric)  worst rel. gap")
for r in rows:
    print(f"{r['draw']:4d}  {r['snr_db']:6.1f}  {r['closed_phi']:.6e}    {r['numeric_phi']:.6e}     "
          f"{r['max_rel_err']:.1e}")
print()
print("snr_dB  rmse_phi   sqrt_crb_phi")
for r in rmse_sweep(trials=100):
    print(f"{r['snr_db']:6.0f}  {r['rmse_phi']:.3e}  {r['sqrt_crb_phi']:.3e}")
