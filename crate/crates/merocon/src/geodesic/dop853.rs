//! Dormand–Prince 8(5,3) step with Hairer's combined error estimate, on a
//! state of `N` complex components.

use crate::algebra::{Cx, ZERO};

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;

const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;

const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;


const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

#[derive(Clone, Debug)]
pub struct Dop853<const N: usize> {
    pub rtol: f64,
    /// Absolute tolerance per component; zero gives pure relative control.
    pub atol: [f64; N],
    safe: f64,
    facc1: f64,
    facc2: f64,
    facold: f64,
}

pub struct StepOutcome<const N: usize> {
    pub accepted: bool,
    pub y: [Cx; N],
    /// Derivative at the new state (valid when accepted).
    pub f: [Cx; N],
    pub err: f64,
    /// Suggested next step.
    pub h_next: f64,
}

fn lin<const N: usize>(y: &[Cx; N], h: f64, terms: &[(f64, &[Cx; N])]) -> [Cx; N] {
    let mut out = *y;
    for (c, k) in terms {
        let s = c * h;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

impl<const N: usize> Dop853<N> {
    pub fn new(rtol: f64, atol: [f64; N]) -> Self {
        Dop853 { rtol, atol, safe: 0.9, facc1: 1.0 / 0.33, facc2: 1.0 / 6.0, facold: 1e-4 }
    }

    fn weight(&self, i: usize, a: Cx, b: Cx) -> f64 {
        (self.atol[i] + self.rtol * a.norm().max(b.norm())).max(f64::MIN_POSITIVE)
    }

    /// Initial step from the size of the state, first and second derivatives.
    pub fn initial_step(&self, f: &impl Fn(&[Cx; N]) -> [Cx; N], y: &[Cx; N], k1: &[Cx; N], h_max: f64) -> f64 {
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..N {
            let sk = self.weight(i, y[i], y[i]);
            dnf += (k1[i].norm() / sk).powi(2);
            dny += (y[i].norm() / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(h_max);
        let y1 = lin(y, h, &[(1.0, k1)]);
        let k2 = f(&y1);
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = self.weight(i, y[i], y[i]);
            der2 += ((k2[i] - k1[i]).norm() / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
        (100.0 * h).min(h1).min(h_max)
    }

    /// One attempted step of size `h > 0` from `y` with `k1 = f(y)`.
    pub fn step(&mut self, f: &impl Fn(&[Cx; N]) -> [Cx; N], y: &[Cx; N], k1: &[Cx; N], h: f64) -> StepOutcome<N> {
        let k2 = f(&lin(y, h, &[(A21, k1)]));
        let k3 = f(&lin(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(&lin(y, h, &[(A41, k1), (A43, &k3)]));
        let k5 = f(&lin(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]));
        let k6 = f(&lin(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]));
        let k7 = f(&lin(y, h, &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
        let k8 = f(&lin(y, h, &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]));
        let k9 = f(&lin(y, h, &[(A91, k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]));
        let k10 = f(&lin(
            y,
            h,
            &[(A101, k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)],
        ));
        let k11 = f(&lin(
            y,
            h,
            &[(A111, k1), (A114, &k4), (A115, &k5), (A116, &k6), (A117, &k7), (A118, &k8), (A119, &k9), (A1110, &k10)],
        ));
        let k12 = f(&lin(
            y,
            h,
            &[
                (A121, k1),
                (A124, &k4),
                (A125, &k5),
                (A126, &k6),
                (A127, &k7),
                (A128, &k8),
                (A129, &k9),
                (A1210, &k10),
                (A1211, &k11),
            ],
        ));
        let mut incr = [ZERO; N];
        for i in 0..N {
            incr[i] = k1[i] * B1
                + k6[i] * B6
                + k7[i] * B7
                + k8[i] * B8
                + k9[i] * B9
                + k10[i] * B10
                + k11[i] * B11
                + k12[i] * B12;
        }
        let y_new = lin(y, h, &[(1.0, &incr)]);

        let (mut err, mut err2) = (0.0, 0.0);
        for i in 0..N {
            let sk = self.weight(i, y[i], y_new[i]);
            let e3 = incr[i] - k1[i] * BHH1 - k9[i] * BHH2 - k12[i] * BHH3;
            err2 += (e3.norm() / sk).powi(2);
            let e5 = k1[i] * ER1
                + k6[i] * ER6
                + k7[i] * ER7
                + k8[i] * ER8
                + k9[i] * ER9
                + k10[i] * ER10
                + k11[i] * ER11
                + k12[i] * ER12;
            err += (e5.norm() / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h * err * (1.0 / (deno * N as f64)).sqrt();
        let err = if err.is_finite() { err } else { f64::INFINITY };

        let fac11 = err.powf(1.0 / 8.0);
        let fac = self.facc2.max(self.facc1.min(fac11 / self.safe));
        if err <= 1.0 {
            self.facold = err.max(1e-4);
            let f_new = f(&y_new);
            StepOutcome { accepted: true, y: y_new, f: f_new, err, h_next: h / fac }
        } else {
            let h_next = if err.is_finite() { h / self.facc1.min(fac11 / self.safe) } else { h * 0.1 };
            StepOutcome { accepted: false, y: *y, f: *k1, err, h_next }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_exponential() {
        let lam = Cx::new(-0.3, 2.0);
        let f = |y: &[Cx; 1]| [y[0] * lam];
        let mut s = Dop853::new(1e-12, [1e-14]);
        let mut y = [Cx::new(1.0, 0.0)];
        let mut k = f(&y);
        let mut t = 0.0;
        let mut h = s.initial_step(&f, &y, &k, 1.0);
        while t < 3.0 {
            let hh = h.min(3.0 - t);
            let o = s.step(&f, &y, &k, hh);
            if o.accepted {
                t += hh;
                y = o.y;
                k = o.f;
            }
            h = o.h_next;
        }
        assert!((y[0] - (lam * 3.0).exp()).norm() < 1e-11);
    }
}
