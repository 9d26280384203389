#!/usr/bin/env python3
"""Regenerates the synthetic gate-level BLIF benchmarks in this directory.

Each circuit is emitted as 1-3 input `.names` gates plus `.latch` registers,
in the style of the MCNC/ISCAS structural netlists. Output is deterministic.
"""
import os

HERE = os.path.dirname(os.path.abspath(__file__))


class Circuit:
    def __init__(self, name):
        self.name = name
        self.inputs = []
        self.outputs = []
        self.gates = []
        self.latches = []
        self.n = 0

    def net(self, hint="n"):
        self.n += 1
        return f"{hint}{self.n}"

    def inp(self, name):
        self.inputs.append(name)
        return name

    def out(self, src, name):
        self.outputs.append(name)
        self.gates.append(([src], name, ["1 1"]))

    def gate(self, ins, rows, hint="n"):
        o = self.net(hint)
        self.gates.append((list(ins), o, rows))
        return o

    def inv(self, a):
        return self.gate([a], ["0 1"])

    def and2(self, a, b):
        return self.gate([a, b], ["11 1"])

    def or2(self, a, b):
        return self.gate([a, b], ["1- 1", "-1 1"])

    def xor2(self, a, b):
        return self.gate([a, b], ["10 1", "01 1"])

    def mux(self, s, a, b):
        # s ? b : a
        return self.gate([s, a, b], ["01- 1", "1-1 1"])

    def maj(self, a, b, c):
        return self.gate([a, b, c], ["11- 1", "1-1 1", "-11 1"])

    def reg_slot(self, hint="r"):
        return self.net(hint)

    def latch(self, d, q, init=0):
        self.latches.append((d, q, init))

    def reg(self, d, init=0):
        q = self.reg_slot()
        self.latch(d, q, init)
        return q

    def add(self, a, b, cin=None):
        out = []
        c = cin
        for x, y in zip(a, b):
            if c is None:
                out.append(self.xor2(x, y))
                c = self.and2(x, y)
            else:
                t = self.xor2(x, y)
                out.append(self.xor2(t, c))
                c = self.maj(x, y, c)
        return out, c

    def write(self):
        lines = [f"# synthetic benchmark {self.name}", f".model {self.name}"]
        lines.append(".inputs " + " ".join(self.inputs))
        lines.append(".outputs " + " ".join(self.outputs))
        for d, q, init in self.latches:
            lines.append(f".latch {d} {q} re clk {init}")
        for ins, o, rows in self.gates:
            lines.append(".names " + " ".join(ins + [o]))
            lines.extend(rows)
        lines.append(".end")
        with open(os.path.join(HERE, self.name + ".blif"), "w") as f:
            f.write("\n".join(lines) + "\n")


def cnt12():
    c = Circuit("cnt12")
    en = c.inp("en")
    clr = c.inp("clr")
    q = [c.reg_slot() for _ in range(12)]
    carry = en
    for i in range(12):
        s = c.xor2(q[i], carry)
        carry = c.and2(q[i], carry)
        d = c.gate([clr, s], ["01 1"])
        c.latch(d, q[i])
        c.out(q[i], f"cnt{i}")
    # terminal count as one wide cover
    tc = c.gate(q, ["1" * 12 + " 1"])
    c.out(tc, "tc")
    c.write()


def lfsr16():
    c = Circuit("lfsr16")
    din = [c.inp(f"d{i}") for i in range(4)]
    q = [c.reg_slot() for _ in range(16)]
    fb = c.xor2(c.xor2(q[15], q[13]), c.xor2(q[12], q[10]))
    nxt = [fb] + q[:15]
    for i in range(16):
        c.latch(nxt[i], q[i], 1 if i == 0 else 0)
    for i in range(4):
        s = c.xor2(din[i], q[i * 4])
        c.out(c.reg(s), f"y{i}")
    c.write()


def pipe_mul4():
    c = Circuit("pipe_mul4")
    a = [c.reg(c.inp(f"a{i}")) for i in range(4)]
    b = [c.reg(c.inp(f"b{i}")) for i in range(4)]
    pp = [[c.and2(a[i], b[j]) for i in range(4)] for j in range(4)]
    acc = pp[0] + ["zero"] * 4
    # zero constant
    c.gates.append(([], "zero", []))
    acc = acc[:8]
    for j in range(1, 4):
        row = ["zero"] * j + pp[j]
        row = (row + ["zero"] * 8)[:8]
        s, _ = c.add(acc, row)
        acc = s
        if j == 2:
            acc = [c.reg(x) for x in acc]
    for i in range(8):
        c.out(c.reg(acc[i]), f"p{i}")
    c.write()


def fir4():
    c = Circuit("fir4")
    x = [c.inp(f"x{i}") for i in range(4)]
    taps = [x]
    for _ in range(3):
        taps.append([c.reg(v) for v in taps[-1]])
    ext = lambda v: v + ["zero"] * 2
    c.gates.append(([], "zero", []))
    s0, _ = c.add(ext(taps[0]), ext(taps[1]))
    s1, _ = c.add(ext(taps[2]), ext(taps[3]))
    s0 = [c.reg(v) for v in s0]
    s1 = [c.reg(v) for v in s1]
    y, _ = c.add(s0, s1)
    for i in range(6):
        c.out(c.reg(y[i]), f"y{i}")
    c.write()


def accum8():
    c = Circuit("accum8")
    x = [c.inp(f"x{i}") for i in range(8)]
    ld = c.inp("ld")
    acc = [c.reg_slot() for _ in range(8)]
    s, _ = c.add(acc, x)
    for i in range(8):
        c.latch(c.mux(ld, s[i], x[i]), acc[i])
    # registered copy and input parity: feed-forward only
    par = x[0]
    for v in x[1:]:
        par = c.xor2(par, v)
    for i in range(8):
        c.out(c.reg(acc[i]), f"q{i}")
    c.out(c.reg(par), "par")
    c.write()


def crc8():
    c = Circuit("crc8")
    din = c.inp("din")
    en = c.inp("en")
    q = [c.reg_slot() for _ in range(8)]
    fb = c.xor2(din, q[7])
    # x^8 + x^2 + x + 1
    nxt = [fb, c.xor2(q[0], fb), c.xor2(q[1], fb)] + q[2:7]
    for i in range(8):
        c.latch(c.mux(en, q[i], nxt[i]), q[i])
        c.out(q[i], f"crc{i}")
    c.write()


def seqdet():
    c = Circuit("seqdet")
    x = c.inp("x")
    # one-hot states for pattern 1011: s0 idle, s1 "1", s2 "10", s3 "101"
    s = [c.reg_slot() for _ in range(4)]
    nx = c.inv(x)
    hit = c.and2(s[3], x)
    n0 = c.gate([s[0], s[2], nx], ["1-1 1", "-11 1"])
    n1 = c.gate([s[0], s[1], hit, x], ["1--1 1", "-1-1 1", "--1- 1"])
    n2 = c.and2(s[1], nx)
    n3 = c.and2(s[2], x)
    n0b = c.gate([n0, s[3], nx], ["1-- 1", "-11 1"])
    for i, (d, init) in enumerate([(n0b, 1), (n1, 0), (n2, 0), (n3, 0)]):
        c.latch(d, s[i], init)
    c.out(c.reg(hit), "found")
    c.write()


def mixed_dp():
    c = Circuit("mixed_dp")
    a = [c.inp(f"a{i}") for i in range(8)]
    b = [c.inp(f"b{i}") for i in range(8)]
    k = [c.inp(f"k{i}") for i in range(4)]
    # feed-forward: registered a+b, then xor with k, registered
    s, co = c.add(a, b)
    s = [c.reg(v) for v in s]
    t = [c.xor2(s[i], k[i % 4]) for i in range(8)]
    for i in range(8):
        c.out(c.reg(t[i]), f"t{i}")
    c.out(c.reg(co), "tco")
    # cyclic: 4-bit accumulator over k
    acc = [c.reg_slot() for _ in range(4)]
    sa, _ = c.add(acc, k)
    for i in range(4):
        c.latch(sa[i], acc[i])
        c.out(acc[i], f"acc{i}")
    c.write()


def alu4():
    c = Circuit("alu4")
    a = [c.inp(f"a{i}") for i in range(4)]
    b = [c.inp(f"b{i}") for i in range(4)]
    op = [c.inp("op0"), c.inp("op1")]
    s, co = c.add(a, b)
    for i in range(4):
        x = c.and2(a[i], b[i])
        y = c.or2(a[i], b[i])
        z = c.xor2(a[i], b[i])
        lo = c.mux(op[0], s[i], x)
        hi = c.mux(op[0], y, z)
        c.out(c.mux(op[1], lo, hi), f"f{i}")
    c.out(co, "cout")
    c.write()


def dsp_array():
    c = Circuit("dsp_array")
    c.gates.append(([], "zero", []))
    xs = [[c.inp(f"x{j}_{i}") for i in range(6)] for j in range(4)]
    w = [c.inp(f"w{i}") for i in range(6)]
    # per lane: registered x * (3-bit slice of w) partial sums, then accumulate
    for j in range(4):
        xr = [c.reg(v) for v in xs[j]]
        coef = w[(j % 2) * 3:(j % 2) * 3 + 3]
        acc_in = [c.and2(xr[i], coef[0]) for i in range(6)] + ["zero"] * 4
        for sh in (1, 2):
            row = ["zero"] * sh + [c.and2(xr[i], coef[sh]) for i in range(6)]
            row = (row + ["zero"] * 10)[:10]
            acc_in, _ = c.add(acc_in, row)
        prod = [c.reg(v) for v in acc_in]
        acc = [c.reg_slot() for _ in range(12)]
        sm, _ = c.add(acc, prod + ["zero"] * 2)
        for i in range(12):
            c.latch(sm[i], acc[i])
        for i in range(12):
            c.out(c.reg(acc[i]), f"y{j}_{i}")
    c.write()


if __name__ == "__main__":
    for f in (cnt12, lfsr16, pipe_mul4, fir4, accum8, crc8, seqdet, mixed_dp, alu4, dsp_array):
        f()
