"""
From spike trains to 4-bit symbols
==================================

Each digit picks one spike time from its pattern.  The symbol is that time
modulo 16 and the key is the spike's index within the pattern.  The codebook
guarantees that every digit lands on a different nonzero remainder, so a
symbol alone names its digit; the key confirms it.
"""

from spikestego import cipher, codebook

# %%
# The built-in table.
cb = codebook.canonical()
for e in cb.entries:
    print(f"digit {e.digit}: spikes {e.pattern}  ts={e.chosen_ts:2d}  "
          f"symbol={e.remainder:2d}  key={e.key_index}")
print("fingerprint", cb.fingerprint)

# %%
# ``derive`` rebuilds a codebook from raw patterns with a greedy
# earliest-feasible rule.  It is valid but not identical to the built-in one,
# which is why the fingerprint travels with every stego image.
alt = codebook.derive(codebook.REFERENCE_PATTERNS)
print("derived timestamps:", [e.chosen_ts for e in alt.entries[1:]])
print("valid:", codebook.validate(alt) == [])
print("same fingerprint:", alt.fingerprint == cb.fingerprint)

# %%
# A sample is a sign digit followed by five magnitude digits.
block = cipher.encrypt_sample(12345, cb)
print("symbols", block.symbols, "keys", block.keys)
print("bits   ", "".join(map(str, cipher.pack_symbols(block.symbols))))
print("back   ", cipher.decrypt_sample(block, cb))

block = cipher.encrypt_sample(-32768, cb)
print("-32768 ->", block.symbols, block.keys, "->", cipher.decrypt_sample(block, cb))

# %%
# The key matters when several digits have a spike on a candidate position.
# Symbol 12 with key 3 is matched by digit 6 (spike at 44) and digit 4
# (spike at 60); the remainder lookup settles it.
print(cipher.candidate_positions(12, cb), cipher.candidate_digits(12, 3, cb))
print(cipher.decrypt_symbol(12, 3, cb))
