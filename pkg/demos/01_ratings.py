"""Rating demo: Elo's order sensitivity vs Bradley-Terry's order invariance.

Run with: python3 demos/01_ratings.py
"""

import random

from factarena.rating import RatingConfig, WinMatrix, bt_fit, elo_expected, elo_run

# The logistic expected-score law: a 400-point gap means 10:1 odds.
print("P(1400 beats 1000) =", elo_expected(1400, 1000))  # 10/11

# Build 200 random battles among five models with a planted pecking order.
rng = random.Random(0)
models = ["ace", "bold", "calm", "dart", "echo"]
battles = []
for _ in range(200):
    a, b = rng.sample(models, 2)
    # lower-indexed models win more often; occasional ties
    p_a = 0.5 + 0.08 * (models.index(b) - models.index(a))
    roll = rng.random()
    outcome = "Tie" if roll > 0.9 else ("A" if rng.random() < p_a else "B")
    battles.append((a, b, outcome))

# Elo: fold sequentially. The result depends on processing order.
s_map = {"A": 1.0, "B": 0.0, "Tie": 0.5}
cfg = RatingConfig(k_factor=16.0)
forward = elo_run(((a, b, s_map[o]) for a, b, o in battles), cfg, models=models)
backward = elo_run(((a, b, s_map[o]) for a, b, o in reversed(battles)), cfg, models=models)
print("\nElo forward vs backward fold:")
for m in models:
    print(f"  {m:6s} {forward.ratings[m]:8.2f} {backward.ratings[m]:8.2f}")

# Bradley-Terry: only the aggregate win matrix matters, ties count half.
matrix = WinMatrix.empty(models)
for a, b, o in battles:
    matrix.add(a, b, o)
table = bt_fit(matrix, RatingConfig(prior_strength=0.0))
print("\nBradley-Terry (order-free, mean centered at 1000):")
for m in sorted(models, key=lambda x: -table.ratings[x]):
    print(f"  {m:6s} {table.ratings[m]:8.2f}  ({table.battle_count[m]:.0f} battles)")
