"""Fixed testbench netlists for the transient engine.

Each topology assembles the trapezoidal companion-model KCL residual and its
Jacobian for a handful of nodes; there is deliberately no general netlist
machinery. Sign convention: residuals sum the currents leaving each node.
Capacitors contribute i_c = 2*(q(v) - q_old)/dt - i_c_old; inductors
contribute i_l = i_l_old + dt/(2L)*(v_L_old + v_L_new).
"""

from __future__ import annotations

from .engine import FLAG_HYSTERESIS_V, CircuitState
from .errors import ConfigError
from .power_devices import (
    DiodeSpec,
    HemtSpec,
    diode_current_and_deriv,
    hemt_channel_current_and_derivs,
    hemt_gate_charge,
)

SERIES_DIODE_R = 1.0  # internal ohms of the pull-down stage's series diode


def _flag(sig: float, prev: int) -> int:
    if sig > FLAG_HYSTERESIS_V:
        return 1
    if sig < -FLAG_HYSTERESIS_V:
        return 0
    return prev


def _pulldown_current_and_derivs(pd, v_gate, v_driver):
    """(i_sink, di/dv_gate, di/dv_driver) of the PNP pull-down stage."""
    if pd is None or not pd.enabled:
        return 0.0, 0.0, 0.0
    headroom = v_gate - pd.pnp_vbe_on - v_driver
    if headroom <= 0.0 or v_gate <= 0.0:
        return 0.0, 0.0, 0.0
    r = pd.pulldown_resistance
    amplified = pd.pnp_gain * headroom / r
    cap = v_gate / r
    if amplified < cap:
        return amplified, pd.pnp_gain / r, -pd.pnp_gain / r
    return cap, 1.0 / r, 0.0


class SeriesRC:
    """Single node with R and C to ground; free decay from an initial voltage."""

    trace_names = ("v",)
    trace_units = {"v": "volt"}
    flag_names = ()

    def __init__(self, r: float, c: float, v0: float = 0.0):
        if r <= 0 or c <= 0:
            raise ConfigError("R and C must be > 0")
        self.r = r
        self.c = c
        self.v0 = v0

    def init_state(self, v_init=None, t0=0.0, **_):
        v = self.v0 if v_init is None else v_init[0]
        # Consistent companion history: the cap carries the resistor current.
        return CircuitState(t=t0, v=(v,), i_l=(), q=(self.c * v,),
                            i_c=(-v / self.r,), flags=(), traces=(v,),
                            flag_sig=())

    def model(self, v, st, dt, u):
        vn = v[0]
        ic = 2.0 * self.c * (vn - st.v[0]) / dt - st.i_c[0]
        ir = vn / self.r
        F = [ic + ir]
        J = [[2.0 * self.c / dt + 1.0 / self.r]]
        scale = [max(1e-3, abs(ic) + abs(ir))]
        return F, J, scale, (ic,)

    def commit(self, v, st, dt, u, aux, t_new):
        vn = v[0]
        return CircuitState(t=t_new, v=(vn,), i_l=(), q=(self.c * vn,),
                            i_c=(aux[0],), flags=(), traces=(vn,), flag_sig=())


class ParallelLC:
    """Lossless LC tank: one node with C to ground and L to ground."""

    trace_names = ("v", "i_l")
    trace_units = {"v": "volt", "i_l": "ampere"}
    flag_names = ()

    def __init__(self, l: float, c: float, v0: float = 0.0, i0: float = 0.0):
        if l <= 0 or c <= 0:
            raise ConfigError("L and C must be > 0")
        self.l = l
        self.c = c
        self.v0 = v0
        self.i0 = i0

    def init_state(self, v_init=None, t0=0.0, **_):
        v = self.v0 if v_init is None else v_init[0]
        # Consistent history: cap current balances the inductor current.
        return CircuitState(t=t0, v=(v,), i_l=(self.i0,), q=(self.c * v,),
                            i_c=(-self.i0,), flags=(), traces=(v, self.i0),
                            flag_sig=())

    def _il_new(self, vn, st, dt):
        # Inductor from the node to ground: v_L = v.
        return st.i_l[0] + dt / (2.0 * self.l) * (st.v[0] + vn)

    def model(self, v, st, dt, u):
        vn = v[0]
        ic = 2.0 * self.c * (vn - st.v[0]) / dt - st.i_c[0]
        il = self._il_new(vn, st, dt)
        F = [ic + il]
        J = [[2.0 * self.c / dt + dt / (2.0 * self.l)]]
        scale = [max(1e-3, abs(ic) + abs(il))]
        return F, J, scale, (ic, il)

    def commit(self, v, st, dt, u, aux, t_new):
        vn = v[0]
        ic, il = aux
        return CircuitState(t=t_new, v=(vn,), i_l=(il,), q=(self.c * vn,),
                            i_c=(ic,), flags=(), traces=(vn, il), flag_sig=())

    def energy(self, state: CircuitState) -> float:
        return 0.5 * self.c * state.v[0] ** 2 + 0.5 * self.l * state.i_l[0] ** 2


class HalfWaveRC:
    """Voltage source behind a PWL diode charging an R-C load; drive "src"."""

    trace_names = ("v", "i_d")
    trace_units = {"v": "volt", "i_d": "ampere"}
    flag_names = ("diode_on",)

    def __init__(self, diode: DiodeSpec, r: float, c: float):
        if r <= 0 or c <= 0:
            raise ConfigError("R and C must be > 0")
        self.diode = diode
        self.r = r
        self.c = c

    def init_state(self, v_init=None, t0=0.0, **_):
        v = 0.0 if v_init is None else v_init[0]
        return CircuitState(t=t0, v=(v,), i_l=(), q=(self.c * v,), i_c=(0.0,),
                            flags=(0,), traces=(v, 0.0),
                            flag_sig=(-self.diode.v_f,))

    def model(self, v, st, dt, u):
        vn = v[0]
        e = u["src"]
        ic = 2.0 * self.c * (vn - st.v[0]) / dt - st.i_c[0]
        ir = vn / self.r
        i_d, g_d = diode_current_and_deriv(self.diode, e - vn)
        F = [ic + ir - i_d]
        J = [[2.0 * self.c / dt + 1.0 / self.r + g_d]]
        scale = [max(1e-3, abs(ic) + abs(ir) + abs(i_d))]
        return F, J, scale, (ic, i_d)

    def commit(self, v, st, dt, u, aux, t_new):
        vn = v[0]
        ic, i_d = aux
        sig = u["src"] - vn - self.diode.v_f
        flags = (_flag(sig, st.flags[0]),)
        return CircuitState(t=t_new, v=(vn,), i_l=(), q=(self.c * vn,),
                            i_c=(ic,), flags=flags, traces=(vn, i_d),
                            flag_sig=(sig,))


class ReceiverChain:
    """Envelope-domain rectifier output: hold node charged from the RF source
    through its Thevenin resistance whenever |env| - 2*v_f beats the node,
    discharging through the bleed resistor and an optional external load.

    ext_load is None, a resistance in ohms, or a callable v -> (i, di/dv).
    Drive name: "env" (RF amplitude at the rectifier input).
    """

    trace_names = ("v_hold", "i_in", "i_bleed", "i_ext")
    trace_units = {"v_hold": "volt", "i_in": "ampere", "i_bleed": "ampere",
                   "i_ext": "ampere"}
    flag_names = ("rect_on",)

    def __init__(self, rect, r_th: float, ext_load=None):
        self.rect = rect
        self.r_th = max(r_th, 1e-3)
        self.ext_load = ext_load

    def _ext(self, vn):
        if self.ext_load is None:
            return 0.0, 0.0
        if callable(self.ext_load):
            return self.ext_load(vn)
        return vn / self.ext_load, 1.0 / self.ext_load

    def init_state(self, v_init=None, t0=0.0, env0: float = 0.0, **_):
        v = 0.0 if v_init is None else v_init[0]
        c = self.rect.c_hold
        ib = v / self.rect.r_bleed
        ie = self._ext(v)[0]
        drive = env0 - 2.0 * self.rect.diode_vf - v
        i_in = drive / self.r_th if drive > 0.0 else 0.0
        return CircuitState(t=t0, v=(v,), i_l=(), q=(c * v,),
                            i_c=(i_in - ib - ie,),
                            flags=(1 if drive > 0 else 0,),
                            traces=(v, i_in, ib, ie),
                            flag_sig=(drive,))

    def model(self, v, st, dt, u):
        # Backward Euler rather than trapezoidal: the chain is dissipative
        # first-order, and L-stability suppresses ringing when the charging
        # path is much stiffer than the envelope grid (near-ideal sources).
        vn = v[0]
        rect = self.rect
        ic = rect.c_hold * (vn - st.v[0]) / dt
        ib = vn / rect.r_bleed
        ie, ge = self._ext(vn)
        drive = u["env"] - 2.0 * rect.diode_vf - vn
        if drive > 0.0:
            i_in = drive / self.r_th
            g_in = 1.0 / self.r_th
        else:
            i_in, g_in = 0.0, 0.0
        F = [ic + ib + ie - i_in]
        J = [[rect.c_hold / dt + 1.0 / rect.r_bleed + ge + g_in]]
        scale = [max(1e-3, abs(ic) + abs(ib) + abs(ie) + abs(i_in))]
        return F, J, scale, (ic, i_in, ib, ie)

    def commit(self, v, st, dt, u, aux, t_new):
        vn = v[0]
        ic, i_in, ib, ie = aux
        sig = u["env"] - 2.0 * self.rect.diode_vf - vn
        flags = (_flag(sig, st.flags[0]),)
        return CircuitState(t=t_new, v=(vn,), i_l=(),
                            q=(self.rect.c_hold * vn,), i_c=(ic,), flags=flags,
                            traces=(vn, i_in, ib, ie), flag_sig=(sig,))


class DptTopology:
    """Double pulse test: SAW-driven gate node, GaN HEMT with inductive load
    and SiC freewheeling diode on a stiff DC rail. Drive name: "env".

    Nodes: [v_hold, v_gate, v_drain] with the pull-down stage enabled,
    [v_gate(=hold), v_drain] without.
    """

    def __init__(self, hemt: HemtSpec, fwd: DiodeSpec, v_dc: float, l: float,
                 r_g: float, c_hold: float, rect_vf: float, r_th: float,
                 pulldown=None):
        if v_dc <= 0 or l <= 0 or r_g <= 0 or c_hold <= 0 or r_th <= 0:
            raise ConfigError("DPT electrical parameters must be > 0")
        self.hemt = hemt
        self.fwd = fwd
        self.v_dc = v_dc
        self.l = l
        self.r_g = r_g
        self.c_hold = c_hold
        self.rect_vf = rect_vf
        self.r_th = r_th
        self.pd = pulldown if (pulldown is not None and pulldown.enabled) else None
        if self.pd is not None:
            self.flag_names = ("rect_on", "fwd_on", "channel_on", "pnp_on")
        else:
            self.flag_names = ("rect_on", "fwd_on", "channel_on")
        self.trace_names = ("v_gs", "v_ds", "i_l", "i_ds", "i_fwd", "v_hold",
                            "i_drv", "env")
        self.trace_units = {"v_gs": "volt", "v_ds": "volt", "i_l": "ampere",
                            "i_ds": "ampere", "i_fwd": "ampere",
                            "v_hold": "volt", "i_drv": "ampere",
                            "env": "volt"}

    # Capacitor order: [hold+gs on gate (split when pull-down), c_gd, c_ds,
    # fwd c_j]; inductor order: [L].
    def init_state(self, v_init=None, i_l_init=0.0, t0=0.0):
        # Rest state: drain pre-charged to the rail (FWD blocking, channel
        # off, zero inductor voltage) so the run starts at equilibrium.
        if self.pd is not None:
            vh, vg, vd = (0.0, 0.0, self.v_dc) if v_init is None else v_init
            v = (vh, vg, vd)
        else:
            vg, vd = (0.0, self.v_dc) if v_init is None else v_init
            vh = vg
            v = (vg, vd)
        q = self._charges(v)
        n_flag = len(self.flag_names)
        st = CircuitState(t=t0, v=v, i_l=(i_l_init,), q=q,
                          i_c=(0.0,) * len(q), flags=(0,) * n_flag,
                          traces=(0.0,) * len(self.trace_names),
                          flag_sig=(0.0,) * n_flag)
        return self._recommit(st, {"env": 0.0})

    def _charges(self, v):
        h = self.hemt
        if self.pd is not None:
            vh, vg, vd = v
            q_hold = self.c_hold * vh
            q_gate = h.c_gs * vg
        else:
            vg, vd = v
            q_hold = self.c_hold * vg
            q_gate = h.c_gs * vg
        q_gd = hemt_gate_charge(h, vd - vg)
        q_ds = h.c_ds * vd
        q_j = self.fwd.c_j * (vd - self.v_dc)
        return (q_hold, q_gate, q_gd, q_ds, q_j)

    def _recommit(self, st, u):
        # Refresh traces/flag signals for a freshly built state.
        return self.commit(list(st.v), st, 1.0, u,
                           self._aux_static(st, u), st.t)

    def _aux_static(self, st, u):
        return (st.i_c, st.i_l[0], 0.0, 0.0, 0.0, 0.0)

    def model(self, v, st, dt, u):
        h = self.hemt
        two_dt = 2.0 / dt
        pd = self.pd
        if pd is not None:
            vh, vg, vd = v
        else:
            vg, vd = v
            vh = vg
        q = self._charges(v)
        ic = [two_dt * (qn - qo) - io for qn, qo, io in zip(q, st.q, st.i_c)]
        c_gd = (h.c_gd_low_vds if (vd - vg) <= h.c_gd_crossover
                else h.c_gd_high_vds)

        e = u["env"]
        drive = e - 2.0 * self.rect_vf - vh
        if drive > 0.0:
            i_chg = drive / self.r_th
            g_chg = 1.0 / self.r_th
        else:
            i_chg, g_chg = 0.0, 0.0

        i_ch, di_dgs, di_dds = hemt_channel_current_and_derivs(h, vg, vd)
        i_fwd, g_fwd = diode_current_and_deriv(self.fwd, vd - self.v_dc)
        il = st.i_l[0] + dt / (2.0 * self.l) * (
            (self.v_dc - st.v[-1]) + (self.v_dc - vd)
        )
        g_il = -dt / (2.0 * self.l)
        ib = vh / self.r_g

        # Gate (or hold) node base terms.
        if pd is None:
            f_g = ic[0] + ic[1] - ic[2] + ib - i_chg
            f_d = ic[2] + ic[3] + ic[4] + i_ch + i_fwd - il
            j_gg = two_dt * (self.c_hold + h.c_gs + c_gd) + 1.0 / self.r_g \
                + g_chg
            j_gd = -two_dt * c_gd
            j_dg = -two_dt * c_gd + di_dgs
            j_dd = two_dt * (c_gd + h.c_ds + self.fwd.c_j) + di_dds + g_fwd \
                - g_il
            F = [f_g, f_d]
            J = [[j_gg, j_gd], [j_dg, j_dd]]
            scale = [
                max(1e-3, abs(ic[0]) + abs(ic[1]) + abs(ic[2]) + abs(ib)
                    + abs(i_chg)),
                max(1e-3, abs(ic[2]) + abs(ic[3]) + abs(ic[4]) + abs(i_ch)
                    + abs(i_fwd) + abs(il)),
            ]
            aux = (tuple(ic), il, i_chg, i_ch, i_fwd, 0.0)
            return F, J, scale, aux

        # Pull-down variant: series diode hold->gate plus PNP sink.
        i_sd_drop = vh - vg - pd.series_diode_vf
        if i_sd_drop > 0.0:
            i_sd = i_sd_drop / SERIES_DIODE_R
            g_sd = 1.0 / SERIES_DIODE_R
        else:
            i_sd, g_sd = 0.0, 0.0
        i_pd, dpd_dg, dpd_dh = _pulldown_current_and_derivs(pd, vg, vh)
        base_frac = 1.0 / pd.pnp_gain

        f_h = ic[0] + ib - i_chg + i_sd - i_pd * base_frac
        f_g = ic[1] - ic[2] - i_sd + i_pd * (1.0 + base_frac)
        f_d = ic[2] + ic[3] + ic[4] + i_ch + i_fwd - il
        j_hh = two_dt * self.c_hold + 1.0 / self.r_g + g_chg + g_sd \
            - dpd_dh * base_frac
        j_hg = -g_sd - dpd_dg * base_frac
        j_gh = -g_sd + dpd_dh * (1.0 + base_frac)
        j_gg = two_dt * (h.c_gs + c_gd) + g_sd + dpd_dg * (1.0 + base_frac)
        j_gd = -two_dt * c_gd
        j_dg = -two_dt * c_gd + di_dgs
        j_dd = two_dt * (c_gd + h.c_ds + self.fwd.c_j) + di_dds + g_fwd - g_il
        F = [f_h, f_g, f_d]
        J = [[j_hh, j_hg, 0.0], [j_gh, j_gg, j_gd], [0.0, j_dg, j_dd]]
        scale = [
            max(1e-3, abs(ic[0]) + abs(ib) + abs(i_chg) + abs(i_sd)
                + abs(i_pd) * base_frac),
            max(1e-3, abs(ic[1]) + abs(ic[2]) + abs(i_sd) + abs(i_pd)),
            max(1e-3, abs(ic[2]) + abs(ic[3]) + abs(ic[4]) + abs(i_ch)
                + abs(i_fwd) + abs(il)),
        ]
        aux = (tuple(ic), il, i_chg, i_ch, i_fwd, i_pd)
        return F, J, scale, aux

    def commit(self, v, st, dt, u, aux, t_new):
        h = self.hemt
        ic, il, i_chg, i_ch, i_fwd, i_pd = aux
        if self.pd is not None:
            vh, vg, vd = v
        else:
            vg, vd = v
            vh = vg
        e = u["env"]
        q = self._charges(v)
        # Trace observables use the step-average cap current (exact charge
        # bookkeeping); the trapezoidal companion in i_c can alternate on
        # quiescent caps and is an integrator internal, not a measurement.
        i_cj = (q[4] - st.q[4]) / dt
        i_ds = il - i_fwd - i_cj
        sig_rect = e - 2.0 * self.rect_vf - vh
        sig_fwd = vd - self.v_dc - self.fwd.v_f
        sig_ch = vg - h.v_th
        sigs = [sig_rect, sig_fwd, sig_ch]
        if self.pd is not None:
            sigs.append(vg - self.pd.pnp_vbe_on - vh)
        flags = tuple(_flag(s, f) for s, f in zip(sigs, st.flags))
        traces = (vg, vd, il, i_ds, i_fwd, vh, i_chg, e)
        return CircuitState(t=t_new, v=tuple(v), i_l=(il,), q=q,
                            i_c=tuple(ic), flags=flags, traces=traces,
                            flag_sig=tuple(sigs))


class BuckTopology:
    """SAW-driven synchronous-node buck: high-side HEMT gated by the floating
    rectifier output, low-side HEMT with gate shorted to source freewheeling
    in the third quadrant, LC output filter and resistive load. Drive: "env".

    Nodes: [v_hold, v_gate, v_sw, v_out] with the pull-down stage enabled,
    [v_hold(=gate), v_sw, v_out] without.
    """

    def __init__(self, hs: HemtSpec, ls: HemtSpec, v_in: float, l: float,
                 c_out: float, r_load: float, r_g: float, c_hold: float,
                 rect_vf: float, r_th: float, pulldown=None):
        if min(v_in, l, c_out, r_load, r_g, c_hold, r_th) <= 0:
            raise ConfigError("buck electrical parameters must be > 0")
        self.hs = hs
        self.ls = ls
        self.v_in = v_in
        self.l = l
        self.c_out = c_out
        self.r_load = r_load
        self.r_g = r_g
        self.c_hold = c_hold
        self.rect_vf = rect_vf
        self.r_th = r_th
        self.pd = pulldown if (pulldown is not None and pulldown.enabled) else None
        base_flags = ["rect_on", "hs_on", "ls_reverse"]
        if self.pd is not None:
            base_flags.append("pnp_on")
        self.flag_names = tuple(base_flags)
        self.trace_names = ("v_out", "v_sw", "v_gs", "v_ds_hs", "i_l", "i_in",
                            "i_hs", "i_ls", "v_hold", "i_drv", "i_pd", "env")
        self.trace_units = {
            "v_out": "volt", "v_sw": "volt", "v_gs": "volt", "v_ds_hs": "volt",
            "i_l": "ampere", "i_in": "ampere", "i_hs": "ampere",
            "i_ls": "ampere", "v_hold": "volt", "i_drv": "ampere",
            "i_pd": "ampere", "env": "volt",
        }

    def _split(self, v):
        if self.pd is not None:
            return v[0], v[1], v[2], v[3]
        return v[0], v[0], v[1], v[2]

    # Capacitor order: [c_hold(h-sw), c_gs(g-sw), c_gd_hs(rail-g),
    # c_ds_hs(rail-sw), ls caps(sw-gnd), c_out].
    def _charges(self, v):
        vh, vg, vsw, vout = self._split(v)
        hs, ls = self.hs, self.ls
        return (
            self.c_hold * (vh - vsw),
            hs.c_gs * (vg - vsw),
            hemt_gate_charge(hs, self.v_in - vg),
            hs.c_ds * (self.v_in - vsw),
            ls.c_ds * vsw + hemt_gate_charge(ls, vsw),
            self.c_out * vout,
        )

    def init_state(self, v_init=None, i_l_init=0.0, t0=0.0):
        if v_init is None:
            v_init = (0.0,) * (4 if self.pd is not None else 3)
        v = tuple(v_init)
        q = self._charges(v)
        n_flag = len(self.flag_names)
        st = CircuitState(t=t0, v=v, i_l=(i_l_init,), q=q,
                          i_c=(0.0,) * len(q), flags=(0,) * n_flag,
                          traces=(0.0,) * len(self.trace_names),
                          flag_sig=(0.0,) * n_flag)
        u = {"env": 0.0}
        aux = (st.i_c, i_l_init, 0.0, 0.0, 0.0, 0.0, 0.0)
        return self.commit(list(v), st, 1.0, u, aux, t0)

    def model(self, v, st, dt, u):
        hs, ls, pd = self.hs, self.ls, self.pd
        two_dt = 2.0 / dt
        vh, vg, vsw, vout = self._split(v)
        vh0, vg0, vsw0, vout0 = self._split(st.v)
        q = self._charges(v)
        ic = [two_dt * (qn - qo) - io for qn, qo, io in zip(q, st.q, st.i_c)]
        c_gd_hs = (hs.c_gd_low_vds if (self.v_in - vg) <= hs.c_gd_crossover
                   else hs.c_gd_high_vds)
        c_ls = ls.c_ds + (ls.c_gd_low_vds if vsw <= ls.c_gd_crossover
                          else ls.c_gd_high_vds)

        e = u["env"]
        drive = e - 2.0 * self.rect_vf - (vh - vsw)
        if drive > 0.0:
            i_chg = drive / self.r_th
            g_chg = 1.0 / self.r_th
        else:
            i_chg, g_chg = 0.0, 0.0
        ib = (vh - vsw) / self.r_g

        i_hs, dhs_dgs, dhs_dds = hemt_channel_current_and_derivs(
            hs, vg - vsw, self.v_in - vsw
        )
        i_ls, dls_dgs, dls_dds = hemt_channel_current_and_derivs(ls, 0.0, vsw)
        il = st.i_l[0] + dt / (2.0 * self.l) * ((vsw0 - vout0) + (vsw - vout))
        g_l = dt / (2.0 * self.l)
        i_load = vout / self.r_load

        if pd is not None:
            sd_drop = vh - vg - pd.series_diode_vf
            if sd_drop > 0.0:
                i_sd = sd_drop / SERIES_DIODE_R
                g_sd = 1.0 / SERIES_DIODE_R
            else:
                i_sd, g_sd = 0.0, 0.0
            i_pd, dpd_dg, dpd_dh = _pulldown_current_and_derivs(
                pd, vg - vsw, vh - vsw
            )
            base_frac = 1.0 / pd.pnp_gain
        else:
            i_sd = g_sd = i_pd = dpd_dg = dpd_dh = base_frac = 0.0

        # KCL, currents leaving each node.
        f_h = ic[0] + ib - i_chg + i_sd - i_pd * base_frac
        f_g = ic[1] - ic[2] - i_sd + i_pd * (1.0 + base_frac)
        f_sw = (-ic[0] - ic[1] - ic[3] + ic[4] + il - i_hs + i_ls - ib
                + i_chg - i_pd)
        f_out = ic[5] + i_load - il

        # Jacobian pieces (d/d vh, vg, vsw, vout per row).
        j = [[0.0] * 4 for _ in range(4)]
        # row h
        j[0][0] = two_dt * self.c_hold + 1.0 / self.r_g + g_chg + g_sd \
            - dpd_dh * base_frac
        j[0][1] = -g_sd - dpd_dg * base_frac
        j[0][2] = -two_dt * self.c_hold - 1.0 / self.r_g - g_chg \
            + (dpd_dh + dpd_dg) * base_frac
        # row g
        j[1][0] = -g_sd + dpd_dh * (1.0 + base_frac)
        j[1][1] = two_dt * (hs.c_gs + c_gd_hs) + g_sd \
            + dpd_dg * (1.0 + base_frac)
        j[1][2] = -two_dt * hs.c_gs - (dpd_dg + dpd_dh) * (1.0 + base_frac)
        # row sw
        j[2][0] = -two_dt * self.c_hold - 1.0 / self.r_g - g_chg \
            - dpd_dh * 1.0
        j[2][1] = -two_dt * hs.c_gs - dhs_dgs - dpd_dg
        j[2][2] = (two_dt * (self.c_hold + hs.c_gs + hs.c_ds + c_ls) + g_l
                   + dhs_dgs + dhs_dds + dls_dds + 1.0 / self.r_g + g_chg
                   + (dpd_dg + dpd_dh))
        j[2][3] = -g_l
        # row out
        j[3][2] = -g_l
        j[3][3] = two_dt * self.c_out + 1.0 / self.r_load + g_l

        scale_h = max(1e-3, abs(ic[0]) + abs(ib) + abs(i_chg) + abs(i_sd)
                      + abs(i_pd) * base_frac)
        scale_g = max(1e-3, abs(ic[1]) + abs(ic[2]) + abs(i_sd) + abs(i_pd))
        scale_sw = max(1e-3, abs(ic[0]) + abs(ic[1]) + abs(ic[3]) + abs(ic[4])
                       + abs(il) + abs(i_hs) + abs(i_ls) + abs(ib)
                       + abs(i_chg) + abs(i_pd))
        scale_out = max(1e-3, abs(ic[5]) + abs(i_load) + abs(il))

        aux = (tuple(ic), il, i_chg, i_hs, i_ls, i_pd, i_sd)
        if pd is not None:
            F = [f_h, f_g, f_sw, f_out]
            J = j
            scale = [scale_h, scale_g, scale_sw, scale_out]
        else:
            # Hold and gate are one node: fold row/col g into row/col h.
            F = [f_h + f_g, f_sw, f_out]
            J = [
                [j[0][0] + j[0][1] + j[1][0] + j[1][1],
                 j[0][2] + j[1][2], j[0][3] + j[1][3]],
                [j[2][0] + j[2][1], j[2][2], j[2][3]],
                [j[3][0] + j[3][1], j[3][2], j[3][3]],
            ]
            scale = [max(scale_h, scale_g), scale_sw, scale_out]
        return F, J, scale, aux

    def commit(self, v, st, dt, u, aux, t_new):
        ic, il, i_chg, i_hs, i_ls, i_pd, i_sd = aux
        vh, vg, vsw, vout = self._split(v)
        e = u["env"]
        q = self._charges(v)
        # Rail current: channel plus displacement through the rail-attached
        # caps, with displacement as the step-average (q_new - q_old)/dt.
        i_in = i_hs + (q[2] - st.q[2]) / dt + (q[3] - st.q[3]) / dt
        sig_rect = e - 2.0 * self.rect_vf - (vh - vsw)
        sig_hs = (vg - vsw) - self.hs.v_th
        sig_ls = -vsw - self.ls.reverse_offset
        sigs = [sig_rect, sig_hs, sig_ls]
        if self.pd is not None:
            sigs.append((vg - vsw) - self.pd.pnp_vbe_on - (vh - vsw))
        flags = tuple(_flag(s, f) for s, f in zip(sigs, st.flags))
        traces = (vout, vsw, vg - vsw, self.v_in - vsw, il, i_in, i_hs, i_ls,
                  vh, i_chg, i_pd, e)
        return CircuitState(t=t_new, v=tuple(v), i_l=(il,), q=q,
                            i_c=tuple(ic), flags=flags, traces=traces,
                            flag_sig=tuple(sigs))
