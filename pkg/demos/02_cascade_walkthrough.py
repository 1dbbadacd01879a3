"""
Inserting bullets one at a time
===============================

The engine keeps the complete future of the current truncation.  Adding a
bullet at the back can set off a cascade: the newcomer destroys a bullet
that was about to collide with someone else, and that someone is freed.
"""

from ricochet import Bullet, Engine

bullets = [Bullet(0, 0.6, 0.0), Bullet(1, 0.2, 1.0), Bullet(2, 1.0, 2.0), Bullet(3, 10.0, 2.1)]

eng = Engine()
for b in bullets:
    out = eng.ingest(b)
    print(f"fire b{b.index} (v={b.velocity}) -> |S|={out.size}, "
          f"potential survivor={out.potential_survivor}, partner={out.partner}")
    for c in eng.scheduled_collisions():
        print(f"    scheduled: b{c.back_index} hits b{c.front_index} at t={c.time:.4f}")
    print("    survivors:", eng.survivors())

# b3 killed b2 before b2 could reach b1, so b1 is back in the survivor set
# even though b3 itself is not a potential survivor.
print("confirmed so far:", eng.confirmed_collisions())
