#include "quadinv/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quadinv/errors.hpp"

namespace quadinv {

namespace {

// Dormand-Prince 8(5,3) coefficients with the dense-output extension.
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;
constexpr double c14 = 0.1e+00;
constexpr double c15 = 0.2e+00;
constexpr double c16 = 0.777777777777777777777777777778e+00;
constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;
constexpr double a141 = 5.61675022830479523392909219681e-2;
constexpr double a147 = 2.53500210216624811088794765333e-1;
constexpr double a148 = -2.46239037470802489917441475441e-1;
constexpr double a149 = -1.24191423263816360469010140626e-1;
constexpr double a1410 = 1.5329179827876569731206322685e-1;
constexpr double a1411 = 8.20105229563468988491666602057e-3;
constexpr double a1412 = 7.56789766054569976138603589584e-3;
constexpr double a1413 = -8.298e-3;
constexpr double a151 = 3.18346481635021405060768473261e-2;
constexpr double a156 = 2.83009096723667755288322961402e-2;
constexpr double a157 = 5.35419883074385676223797384372e-2;
constexpr double a158 = -5.49237485713909884646569340306e-2;
constexpr double a1511 = -1.08347328697249322858509316994e-4;
constexpr double a1512 = 3.82571090835658412954920192323e-4;
constexpr double a1513 = -3.40465008687404560802977114492e-4;
constexpr double a1514 = 1.41312443674632500278074618366e-1;
constexpr double a161 = -4.28896301583791923408573538692e-1;
constexpr double a166 = -4.69762141536116384314449447206e0;
constexpr double a167 = 7.68342119606259904184240953878e0;
constexpr double a168 = 4.06898981839711007970213554331e0;
constexpr double a169 = 3.56727187455281109270669543021e-1;
constexpr double a1613 = -1.39902416515901462129418009734e-3;
constexpr double a1614 = 2.9475147891527723389556272149e0;
constexpr double a1615 = -9.15095847217987001081870187138e0;
constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;
constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;
constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;
constexpr double d41 = -0.84289382761090128651353491142e+01;
constexpr double d46 = 0.56671495351937776962531783590e+00;
constexpr double d47 = -0.30689499459498916912797304727e+01;
constexpr double d48 = 0.23846676565120698287728149680e+01;
constexpr double d49 = 0.21170345824450282767155149946e+01;
constexpr double d410 = -0.87139158377797299206789907490e+00;
constexpr double d411 = 0.22404374302607882758541771650e+01;
constexpr double d412 = 0.63157877876946881815570249290e+00;
constexpr double d413 = -0.88990336451333310820698117400e-01;
constexpr double d414 = 0.18148505520854727256656404962e+02;
constexpr double d415 = -0.91946323924783554000451984436e+01;
constexpr double d416 = -0.44360363875948939664310572000e+01;
constexpr double d51 = 0.10427508642579134603413151009e+02;
constexpr double d56 = 0.24228349177525818288430175319e+03;
constexpr double d57 = 0.16520045171727028198505394887e+03;
constexpr double d58 = -0.37454675472269020279518312152e+03;
constexpr double d59 = -0.22113666853125306036270938578e+02;
constexpr double d510 = 0.77334326684722638389603898808e+01;
constexpr double d511 = -0.30674084731089398182061213626e+02;
constexpr double d512 = -0.93321305264302278729567221706e+01;
constexpr double d513 = 0.15697238121770843886131091075e+02;
constexpr double d514 = -0.31139403219565177677282850411e+02;
constexpr double d515 = -0.93529243588444783865713862664e+01;
constexpr double d516 = 0.35816841486394083752465898540e+02;
constexpr double d61 = 0.19985053242002433820987653617e+02;
constexpr double d66 = -0.38703730874935176555105901742e+03;
constexpr double d67 = -0.18917813819516756882830838328e+03;
constexpr double d68 = 0.52780815920542364900561016686e+03;
constexpr double d69 = -0.11573902539959630126141871134e+02;
constexpr double d610 = 0.68812326946963000169666922661e+01;
constexpr double d611 = -0.10006050966910838403183860980e+01;
constexpr double d612 = 0.77771377980534432092869265740e+00;
constexpr double d613 = -0.27782057523535084065932004339e+01;
constexpr double d614 = -0.60196695231264120758267380846e+02;
constexpr double d615 = 0.84320405506677161018159903784e+02;
constexpr double d616 = 0.11992291136182789328035130030e+02;
constexpr double d71 = -0.25693933462703749003312586129e+02;
constexpr double d76 = -0.15418974869023643374053993627e+03;
constexpr double d77 = -0.23152937917604549567536039109e+03;
constexpr double d78 = 0.35763911791061412378285349910e+03;
constexpr double d79 = 0.93405324183624310003907691704e+02;
constexpr double d710 = -0.37458323136451633156875139351e+02;
constexpr double d711 = 0.10409964950896230045147246184e+03;
constexpr double d712 = 0.29840293426660503123344363579e+02;
constexpr double d713 = -0.43533456590011143754432175058e+02;
constexpr double d714 = 0.96324553959188282948394950600e+02;
constexpr double d715 = -0.39177261675615439165231486172e+02;
constexpr double d716 = -0.14972683625798562581422125276e+03;

double rms_norm(const std::vector<double>& v, const std::vector<double>& scale) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double q = v[i] / scale[i];
        s += q * q;
    }
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

DenseTrajectory integrate_dense(std::size_t n, const OdeRhs& f, double t0, const double* y0,
                                double t1, const OdeOptions& opt, const StepObserver& on_step) {
    if (n == 0) throw UsageError("integrate_dense: empty state");
    if (!(t1 >= t0)) throw UsageError("integrate_dense: only forward integration is supported");

    DenseTrajectory out;
    out.dim_ = n;
    out.t_begin_ = t0;
    out.t_end_ = t1;
    out.y_begin_.assign(y0, y0 + n);
    for (double v : out.y_begin_) {
        if (!std::isfinite(v)) throw UsageError("integrate_dense: non-finite initial state");
    }
    if (on_step) on_step(t0, y0);
    if (t1 == t0) return out;

    using Vec = std::vector<double>;
    Vec y(y0, y0 + n), k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n),
        k11(n), k12(n), k13(n), k14(n), k15(n), k16(n), yw(n), ynew(n), bsum(n), sc(n);

    double t = t0;
    f(t, y.data(), k1.data());

    // Initial step guess (Hairer, Norsett, Wanner).
    const double span = t1 - t0;
    double h;
    {
        for (std::size_t i = 0; i < n; ++i) sc[i] = opt.atol + opt.rtol * std::abs(y[i]);
        const double d0 = rms_norm(y, sc);
        const double d1 = rms_norm(k1, sc);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        for (std::size_t i = 0; i < n; ++i) yw[i] = y[i] + h0 * k1[i];
        f(t + h0, yw.data(), k2.data());
        for (std::size_t i = 0; i < n; ++i) k3[i] = (k2[i] - k1[i]) / h0;
        const double d2 = rms_norm(k3, sc);
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 8.0);
        h = std::min({100.0 * h0, h1, span});
    }

    constexpr double safe = 0.9, min_scale = 0.333, max_scale = 6.0;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    bool last_rejected = false;
    std::size_t steps = 0;

    while (t < t1) {
        if (++steps > opt.max_steps)
            throw IntegrationError("integrate_dense: step budget exhausted", t);
        if (h < 16.0 * eps * std::max(1.0, std::abs(t)))
            throw IntegrationError("integrate_dense: step size underflow", t);
        bool final_step = false;
        if (t + h >= t1 || t1 - (t + h) < 16.0 * eps * std::max(1.0, std::abs(t1))) {
            h = t1 - t;
            final_step = true;
        }

        auto stage = [&](double c, auto&& combo, Vec& k) {
            for (std::size_t i = 0; i < n; ++i) yw[i] = y[i] + h * combo(i);
            f(t + c * h, yw.data(), k.data());
        };
        stage(c2, [&](std::size_t i) { return a21 * k1[i]; }, k2);
        stage(c3, [&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }, k3);
        stage(c4, [&](std::size_t i) { return a41 * k1[i] + a43 * k3[i]; }, k4);
        stage(c5, [&](std::size_t i) { return a51 * k1[i] + a53 * k3[i] + a54 * k4[i]; }, k5);
        stage(c6, [&](std::size_t i) { return a61 * k1[i] + a64 * k4[i] + a65 * k5[i]; }, k6);
        stage(c7, [&](std::size_t i) {
            return a71 * k1[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i];
        }, k7);
        stage(c8, [&](std::size_t i) {
            return a81 * k1[i] + a84 * k4[i] + a85 * k5[i] + a86 * k6[i] + a87 * k7[i];
        }, k8);
        stage(c9, [&](std::size_t i) {
            return a91 * k1[i] + a94 * k4[i] + a95 * k5[i] + a96 * k6[i] + a97 * k7[i] +
                   a98 * k8[i];
        }, k9);
        stage(c10, [&](std::size_t i) {
            return a101 * k1[i] + a104 * k4[i] + a105 * k5[i] + a106 * k6[i] + a107 * k7[i] +
                   a108 * k8[i] + a109 * k9[i];
        }, k10);
        stage(c11, [&](std::size_t i) {
            return a111 * k1[i] + a114 * k4[i] + a115 * k5[i] + a116 * k6[i] + a117 * k7[i] +
                   a118 * k8[i] + a119 * k9[i] + a1110 * k10[i];
        }, k11);
        stage(1.0, [&](std::size_t i) {
            return a121 * k1[i] + a124 * k4[i] + a125 * k5[i] + a126 * k6[i] + a127 * k7[i] +
                   a128 * k8[i] + a129 * k9[i] + a1210 * k10[i] + a1211 * k11[i];
        }, k12);

        double err3 = 0.0, err5 = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            bsum[i] = b1 * k1[i] + b6 * k6[i] + b7 * k7[i] + b8 * k8[i] + b9 * k9[i] +
                      b10 * k10[i] + b11 * k11[i] + b12 * k12[i];
            ynew[i] = y[i] + h * bsum[i];
            if (!std::isfinite(ynew[i])) finite = false;
            const double s = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double e3 = bsum[i] - e31 * k1[i] - e32 * k9[i] - e33 * k12[i];
            const double e5 = e51 * k1[i] + e56 * k6[i] + e57 * k7[i] + e58 * k8[i] +
                              e59 * k9[i] + e510 * k10[i] + e511 * k11[i] + e512 * k12[i];
            err3 += (e3 / s) * (e3 / s);
            err5 += (e5 / s) * (e5 / s);
        }
        const double denom = err5 + 0.01 * err3;
        double err = denom > 0.0 ? std::abs(h) * err5 * std::sqrt(1.0 / (n * denom)) : 0.0;
        if (!finite || !std::isfinite(err)) err = 1e10;

        if (err > 1.0) {
            h *= std::max(min_scale, safe * std::pow(err, -1.0 / 8.0));
            last_rejected = true;
            continue;
        }

        // Accepted: build the dense-output coefficients.
        const double tnew = final_step ? t1 : t + h;
        f(tnew, ynew.data(), k13.data());

        DenseTrajectory::Segment seg{t, h, Vec(8 * n)};
        double* r1 = seg.r.data();
        double* r2 = r1 + n;
        double* r3 = r2 + n;
        double* r4 = r3 + n;
        double* r5 = r4 + n;
        double* r6 = r5 + n;
        double* r7 = r6 + n;
        double* r8 = r7 + n;
        for (std::size_t i = 0; i < n; ++i) {
            r1[i] = y[i];
            r2[i] = ynew[i] - y[i];
            r3[i] = h * k1[i] - r2[i];
            r4[i] = r2[i] - h * k13[i] - r3[i];
            r5[i] = d41 * k1[i] + d46 * k6[i] + d47 * k7[i] + d48 * k8[i] + d49 * k9[i] +
                    d410 * k10[i] + d411 * k11[i] + d412 * k12[i];
            r6[i] = d51 * k1[i] + d56 * k6[i] + d57 * k7[i] + d58 * k8[i] + d59 * k9[i] +
                    d510 * k10[i] + d511 * k11[i] + d512 * k12[i];
            r7[i] = d61 * k1[i] + d66 * k6[i] + d67 * k7[i] + d68 * k8[i] + d69 * k9[i] +
                    d610 * k10[i] + d611 * k11[i] + d612 * k12[i];
            r8[i] = d71 * k1[i] + d76 * k6[i] + d77 * k7[i] + d78 * k8[i] + d79 * k9[i] +
                    d710 * k10[i] + d711 * k11[i] + d712 * k12[i];
        }
        stage(c14, [&](std::size_t i) {
            return a141 * k1[i] + a147 * k7[i] + a148 * k8[i] + a149 * k9[i] + a1410 * k10[i] +
                   a1411 * k11[i] + a1412 * k12[i] + a1413 * k13[i];
        }, k14);
        stage(c15, [&](std::size_t i) {
            return a151 * k1[i] + a156 * k6[i] + a157 * k7[i] + a158 * k8[i] + a1511 * k11[i] +
                   a1512 * k12[i] + a1513 * k13[i] + a1514 * k14[i];
        }, k15);
        stage(c16, [&](std::size_t i) {
            return a161 * k1[i] + a166 * k6[i] + a167 * k7[i] + a168 * k8[i] + a169 * k9[i] +
                   a1613 * k13[i] + a1614 * k14[i] + a1615 * k15[i];
        }, k16);
        for (std::size_t i = 0; i < n; ++i) {
            r5[i] = h * (r5[i] + d413 * k13[i] + d414 * k14[i] + d415 * k15[i] + d416 * k16[i]);
            r6[i] = h * (r6[i] + d513 * k13[i] + d514 * k14[i] + d515 * k15[i] + d516 * k16[i]);
            r7[i] = h * (r7[i] + d613 * k13[i] + d614 * k14[i] + d615 * k15[i] + d616 * k16[i]);
            r8[i] = h * (r8[i] + d713 * k13[i] + d714 * k14[i] + d715 * k15[i] + d716 * k16[i]);
        }
        out.segments_.push_back(std::move(seg));

        t = tnew;
        y = ynew;
        k1 = k13;
        if (on_step) on_step(t, y.data());

        double scale = err == 0.0 ? max_scale : safe * std::pow(err, -1.0 / 8.0);
        scale = std::clamp(scale, min_scale, max_scale);
        if (last_rejected) scale = std::min(scale, 1.0);
        h *= scale;
        last_rejected = false;
    }
    return out;
}

const DenseTrajectory::Segment& DenseTrajectory::locate(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(t_end_));
    if (t < t_begin_ - tol || t > t_end_ + tol)
        throw DomainError("DenseTrajectory: time outside integrated interval");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const Segment& s) { return v < s.t0; });
    if (it == segments_.begin()) return segments_.front();
    return *(it - 1);
}

void DenseTrajectory::state(double t, double* y) const {
    for (std::size_t i = 0; i < dim_; ++i) y[i] = value(t, i);
}

double DenseTrajectory::value(double t, std::size_t i) const {
    if (i >= dim_) throw UsageError("DenseTrajectory: component out of range");
    if (segments_.empty()) {
        if (std::abs(t - t_begin_) > 1e-12 * std::max(1.0, std::abs(t_begin_)))
            throw DomainError("DenseTrajectory: time outside integrated interval");
        return y_begin_[i];
    }
    const Segment& s = locate(t);
    const std::size_t n = dim_;
    const double* r = s.r.data();
    const double th = (t - s.t0) / s.h;
    const double th1 = 1.0 - th;
    const double p6 = r[6 * n + i] + th * r[7 * n + i];
    const double p5 = r[5 * n + i] + th1 * p6;
    const double p4 = r[4 * n + i] + th * p5;
    const double p3 = r[3 * n + i] + th1 * p4;
    const double p2 = r[2 * n + i] + th * p3;
    const double p1 = r[1 * n + i] + th1 * p2;
    return r[i] + th * p1;
}

double DenseTrajectory::derivative(double t, std::size_t i) const {
    if (i >= dim_) throw UsageError("DenseTrajectory: component out of range");
    if (segments_.empty()) throw DomainError("DenseTrajectory: no steps taken");
    const Segment& s = locate(t);
    const std::size_t n = dim_;
    const double* r = s.r.data();
    const double th = (t - s.t0) / s.h;
    const double th1 = 1.0 - th;
    const double r8 = r[7 * n + i];
    const double p6 = r[6 * n + i] + th * r8;
    const double p5 = r[5 * n + i] + th1 * p6;
    const double p4 = r[4 * n + i] + th * p5;
    const double p3 = r[3 * n + i] + th1 * p4;
    const double p2 = r[2 * n + i] + th * p3;
    const double p1 = r[1 * n + i] + th1 * p2;
    return (p1 - th * (p2 - th1 * (p3 - th * (p4 - th1 * (p5 - th * (p6 - th1 * r8)))))) / s.h;
}

std::vector<double> DenseTrajectory::nodes() const {
    std::vector<double> out;
    out.reserve(segments_.size() + 1);
    out.push_back(t_begin_);
    for (std::size_t k = 1; k < segments_.size(); ++k) out.push_back(segments_[k].t0);
    if (!segments_.empty()) out.push_back(t_end_);
    return out;
}

} // namespace quadinv
