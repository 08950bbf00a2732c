"""Export attractor covers as SVG through the command line front end.

Writes into ``quantinv-demo/``; open the SVG files in a browser. The
dashed lines mark the strip |x_1| = 1.
"""

from quantinv.cli import main

main(["attractor", "ex1.sys", "--level", "8", "--out", "quantinv-demo"])
main(["attractor", "ex3.sys", "--level", "8", "--out", "quantinv-demo"])
main(["graph", "ex3.sys", "--depth", "1", "--out", "quantinv-demo"])
