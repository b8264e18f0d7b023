"""
One run of the protocol, honest and under attack
================================================

Alice prepares (4 + delta) n squeezed states, Bob measures each in a random
quadrature, they sift, compare n check bits per run and distil a key from the
other n with the 7-bit CSS code.
"""

from qkdlab import EveModel, ProtocolConfig, run_protocol
from qkdlab.gkp_code import SQRT_PI

honest = ProtocolConfig(tilde_delta=0.25, n=700, seed=1)
out = run_protocol(honest)
print(out.status.value, "| sifted", out.sifted_count, "| errors",
      round(out.p_hat_z, 4), round(out.p_hat_x, 4))
print("key:", "".join(map(str, out.key_alice[:40])), "...", len(out.key_alice), "bits")
print("keys agree:", out.keys_agree)
print("messages:", out.transcript_summary)

# A wider source: errors show up but stay under the threshold
out = run_protocol(ProtocolConfig(tilde_delta=0.5, n=2000, seed=1))
print("\nwider source:", out.status.value, round(out.p_hat_z, 4), round(out.p_hat_x, 4))

# Eve measures a random quadrature and resends; the wrong guesses show up
for eve in (EveModel.intercept_resend(), EveModel.fixed_shift(SQRT_PI, 0.0)):
    out = run_protocol(ProtocolConfig(tilde_delta=0.25, n=200, seed=1, eve=eve))
    print(f"{eve.variant:>9}: {out.status.value}, p_z={out.p_hat_z:.3f}, p_x={out.p_hat_x:.3f}")

# Loss over kappa*d = 0.2 with Bob rescaling his outcome
lossy = ProtocolConfig(tilde_delta=0.3, n=700, kappa_d=0.2, amplified=True, seed=1)
out = run_protocol(lossy)
print("\nlossy link:", out.status.value, round(out.p_hat_z, 4), "keys agree:", out.keys_agree)

# A 7-bit block only fixes one error, so at a couple of percent some of the
# hundred blocks come out different.  Real runs would use a longer code.
wrong = (out.key_alice != out.key_bob).sum()
print(f"key bits that differ: {wrong} of {len(out.key_alice)}")
