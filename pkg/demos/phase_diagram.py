"""Map the recovery phase transition in the (p, m) plane.

For each grid cell the script runs seeded generate-sketch-recover trials
and records the success fraction; the output heatmap shows the familiar
boundary near p = m^2 / 14 (drawn in red on the SVG). Uses a coarse grid
so it finishes in a few minutes on one core; enlarge the grid or trial
count for a smoother picture.
"""

from matsketch import phase_diagram, render_phase_svg

p_values = list(range(10, 61, 10))
m_values = list(range(2, 61, 10))

grid = phase_diagram(p_values, m_values, trials=10, d=4, master_seed=0)

grid.to_csv("phase.csv")
with open("phase.svg", "w") as fh:
    fh.write(render_phase_svg(grid))

print("p    m50 (sketch size at 50% success)")
for p in p_values:
    m50 = grid.m50(p)
    print(f"{p:<4} {'-' if m50 is None else f'{m50:.1f}'}")
print("wrote phase.csv and phase.svg")
