// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "regimes.hpp"
#include "singletsim/analysis.hpp"
#include "singletsim/hamiltonian.hpp"
#include "singletsim/propagator.hpp"
#include "singletsim/sequences.hpp"
#include "synthetic.hpp"

using namespace singletsim;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [fail: " << what << "]";
        }
    }
};

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

std::vector<double> doubled(const std::vector<double>& t) {
    std::vector<double> out;
    for (double v : t) out.push_back(2.0 * v);
    return out;
}

void rabi_frequency(Outcome& o) {
    const auto g = regime::glutamate();
    const auto tr = run_rabi(g.system, regime::rabi(g.transfer, synth::linspace(0.0, 3.0, 151)));
    const auto fit = fit_rabi(tr.sweep, tr.observable, RabiMode::sin2);
    const double f = fit.value("f_hz");
    o.detail << "f=" << f << " Hz (cis-trans 2.57 Hz)";
    o.check(fit.converged, "fit did not converge");
    o.check(synth::rel(f, 2.57) < 0.02, "f outside 2%");
}

void operating_points(Outcome& o) {
    struct Point {
        double nu, d12, anchor;
    };
    for (const Point p : {Point{500.0, 52.0, 2.70}, Point{280.0, 36.0, 2.30}, Point{47.0, 52.0, 23.1}}) {
        const double approx = effective_nutation_difference(p.nu, p.d12);
        const double exact = exact_nutation_difference(p.nu, p.d12);
        o.detail << p.nu << "/" << p.d12 << ": " << approx << " vs exact " << exact << "; ";
        o.check(synth::rel(approx, exact) < 0.01, "approximation off by more than 1%");
        o.check(std::abs(approx - p.anchor) < 0.05, "operating point does not reproduce its anchor");
    }
}

double max_receiving(const SpinSystem& s, const SpinLockParams& lock) {
    return max_of(run_rabi(s, regime::rabi(lock, synth::linspace(0.0, 10.0, 501))).observable);
}

void null_transfer(Outcome& o) {
    const auto g = regime::glutamate();
    const double peak = max_receiving(regime::equivalent_pairs(3.7), g.transfer);
    // glutamate offsets, all four interpair couplings equal: leaks at second order in the
    // intrapair shift difference over the nutation frequency
    Eigen::MatrixXd j = g.system.couplings_hz();
    for (int a : {0, 1}) {
        for (int b : {2, 3}) j(a, b) = j(b, a) = 3.7;
    }
    const double leak = max_receiving(SpinSystem(g.system.offsets_hz(), j, g.system.pairs()), g.transfer);
    o.detail << "max receiving singlet " << peak << " (info: inequivalent glutamate pairs leak " << leak << ")";
    o.check(peak < 1e-6, "receiving pair populated");
}

void numerical_hygiene(Outcome& o) {
    const auto g = regime::glutamate();
    Sequence seq;
    for (int k = 0; k < static_cast<int>(g.access.size()); ++k) {
        for (const auto& s : access_sequence(g.system, k, g.access[static_cast<std::size_t>(k)])) seq.push_back(s);
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (seq.size() < 1000) {
        switch (seq.size() % 3) {
            case 0: seq.push_back(HardPulse{u(rng) * 6.0, u(rng) * 6.0}); break;
            case 1: seq.push_back(Delay{u(rng) * 0.05, u(rng) * 500.0}); break;
            default: seq.push_back(SpinLock{{u(rng) * 2000.0, u(rng) * 6.0, 380.0 + u(rng) * 100.0}, u(rng) * 0.05});
        }
    }
    Protocol p = regime::rabi(g.transfer, {0.0});
    DensityState rho = transfer_initial_state(g.system, p);
    const cplx tr0 = rho.matrix().trace();
    double worst_u = 0.0, worst_tr = 0.0;
    for (const auto& s : seq) {
        worst_u = std::max(worst_u, unitarity_error(segment_unitary(g.system, s)));
        rho = propagate_final(rho, {s}, g.system);
        worst_tr = std::max(worst_tr, std::abs(rho.matrix().trace() - tr0));
    }
    o.detail << seq.size() << " segments, max |U'U-1|=" << worst_u << ", max trace drift=" << worst_tr;
    o.check(worst_u < 1e-10, "segment not unitary");
    o.check(worst_tr < 1e-10, "trace drift");
}

void effective_model(Outcome& o) {
    const auto g = regime::glutamate();
    const double d12 = g.system.pair_offset_hz(1) - g.system.pair_offset_hz(0);
    const auto times = synth::linspace(0.0, 4.0, 201);
    for (double nu : {5.0 * d12, 300.0, 400.0, g.transfer.nutation_hz, 1000.0, 2000.0}) {
        SpinLockParams lock = g.transfer;
        lock.nutation_hz = nu;
        const auto tr = run_rabi(g.system, regime::rabi(lock, times));
        const double e = regime::rms(tr.observable, effective_rabi(effective_components(g.system, 0, 1, lock), times));
        o.detail << nu << " Hz: " << e << "; ";
        o.check(e < 0.05, "RMS at or above 0.05");
    }
}

void double_rabi_period(Outcome& o) {
    const auto s = regime::degenerate_pairs();
    const auto times = synth::linspace(0.0, 0.4, 81);
    const auto tr = run_double_rabi(s, regime::double_rabi({2000.0, kPhaseY, 408.0}, kPhaseMinusY, times));
    const auto fit = fit_rabi(doubled(times), tr.observable, RabiMode::sin2);
    const double f = fit.value("f_hz");
    o.detail << "period in 2*tau " << 1.0 / f << " s vs 1/|Jcis-Jtrans| " << 1.0 / 2.57 << " s";
    o.check(synth::rel(f, 2.57) < 0.02, "period outside 2%");
}

void phase_independence(Outcome& o) {
    const auto g = regime::glutamate();
    const auto times = synth::linspace(0.0, 3.0, 151);
    SpinLockParams minus = g.transfer;
    minus.phase_rad = kPhaseMinusY;
    const auto a = run_rabi(g.system, regime::rabi(g.transfer, times));
    const auto b = run_rabi(g.system, regime::rabi(minus, times));
    const double d = regime::max_abs_diff(a.observable, b.observable);
    o.detail << "max |P(+y)-P(-y)|=" << d;
    o.check(d < 1e-3, "phase dependence");
}

void resonance_scan(Outcome& o) {
    const auto g = regime::glutamate();
    Protocol p = regime::rabi(g.transfer, synth::linspace(0.25, 8.0, 32));
    p.kind = ProtocolKind::resonance_scan;
    p.sweep_variable = SweepVariable::delta_nutation;
    p.scan_durations = synth::linspace(0.0, 3.0, 121);
    const auto res = run_resonance_scan(g.system, p);
    o.check(res.lorentzian.has_value(), "no Lorentzian fit: " + res.warning);
    if (!res.lorentzian) return;
    const double c = 0.5 / *transfer_period(interpair_couplings(g.system, 0, 1));
    const double de = std::abs(g.system.coupling_hz(0, 1) - g.system.coupling_hz(2, 3));
    const double center = res.lorentzian->value("center");
    const double fwhm = res.lorentzian->value("fwhm");
    o.detail << "center " << center << " vs dE " << de << ", FWHM " << fwhm << " vs 4C " << 4.0 * c;
    o.check(std::abs(center - de) < 0.1 * de, "center outside 10%");
    o.check(std::abs(fwhm - 4.0 * c) < 0.1 * 4.0 * c, "FWHM outside 10%");
}

void fit_round_trips(Outcome& o) {
    double worst_noiseless = 0.0;
    auto note = [&](double got, double want) { worst_noiseless = std::max(worst_noiseless, synth::rel(got, want)); };
    const synth::Rabi rp;
    const synth::Ramsey mp;
    const synth::Lorentzian lp;
    const synth::Exponential ep;
    {
        const auto s = synth::rabi(rp);
        const auto r = fit_rabi(s.t, s.y, rp.mode);
        note(r.value("A"), rp.a);
        note(r.value("f_hz"), rp.f);
        note(r.value("c"), rp.c);
        note(r.value("T_rabi_s"), rp.t_rabi);
    }
    {
        const auto s = synth::ramsey(mp);
        const auto r = fit_ramsey(s.t, s.y, mp.sign);
        note(r.value("A"), mp.a);
        note(r.value("f_hz"), mp.f);
        note(r.value("phi_rad"), mp.phi);
        note(r.value("c"), mp.c);
        note(r.value("T2s_s"), mp.t2);
        note(r.value("Ts_s"), mp.ts);
    }
    {
        const auto s = synth::lorentzian(lp);
        const auto r = fit_lorentzian(s.t, s.y);
        note(r.value("center"), lp.x0);
        note(r.value("fwhm"), lp.fwhm);
        note(r.value("height"), lp.h);
        note(r.value("baseline"), lp.b);
    }
    {
        const auto s = synth::exponential(ep);
        const auto r = fit_exponential(s.t, s.y);
        note(r.value("A"), ep.a);
        note(r.value("T_s"), ep.tau);
        note(r.value("c"), ep.c);
    }
    o.detail << "noiseless worst rel " << worst_noiseless << "; ";
    o.check(worst_noiseless < 1e-6, "noiseless round trip");

    // SNR 20: sigma = amplitude / 20
    const int seeds = 50;
    double worst_f = 0.0;
    std::map<std::string, double> mean;
    for (int k = 1; k <= seeds; ++k) {
        const auto seed = static_cast<std::uint64_t>(k);
        const auto r = synth::noisy(synth::rabi(rp), rp.a / 20.0, seed);
        const auto fr = fit_rabi(r.t, r.y, rp.mode);
        worst_f = std::max(worst_f, synth::rel(fr.value("f_hz"), rp.f));
        mean["T_rabi"] += fr.value("T_rabi_s") / seeds;
        const auto m = synth::noisy(synth::ramsey(mp), mp.a / 20.0, seed + 1000);
        const auto fm = fit_ramsey(m.t, m.y, mp.sign);
        worst_f = std::max(worst_f, synth::rel(fm.value("f_hz"), mp.f));
        mean["T2s"] += fm.value("T2s_s") / seeds;
        mean["Ts"] += fm.value("Ts_s") / seeds;
        const auto e = synth::noisy(synth::exponential(ep), ep.a / 20.0, seed + 2000);
        mean["T_exp"] += fit_exponential(e.t, e.y).value("T_s") / seeds;
    }
    const std::map<std::string, double> truth{
        {"T_rabi", rp.t_rabi}, {"T2s", mp.t2}, {"Ts", mp.ts}, {"T_exp", ep.tau}};
    o.detail << "SNR 20 over " << seeds << " seeds: worst f error " << worst_f;
    o.check(worst_f < 0.02, "f outside 2% in some realization");
    for (const auto& [name, want] : truth) {
        const double err = synth::rel(mean.at(name), want);
        o.detail << ", mean " << name << " error " << err;
        o.check(err < 0.10, name + " mean outside 10%");
    }
}

void weak_coupling(Outcome& o) {
    const auto p = make_preset("phe-gly-gly");
    const double dj = 1.0 / *transfer_period(interpair_couplings(p.system, 0, 1));
    Protocol r = regime::rabi(p.transfer, synth::linspace(0.0, 20.0, 81));
    r.access = p.access;
    const auto tr =
        apply_relaxation_envelope(run_rabi(p.system, r), RelaxationEnvelope::uniform_singlet(2, 11.0));
    const auto peak = std::max_element(tr.observable.begin(), tr.observable.end());
    const bool interior = peak != tr.observable.begin() && peak != tr.observable.end() - 1;
    bool single_hump = true;
    for (auto it = tr.observable.begin() + 1; it != tr.observable.end(); ++it) {
        if (it <= peak && *it < *(it - 1) - 1e-12) single_hump = false;
        if (it > peak && *it > *(it - 1) + 1e-12) single_hump = false;
    }
    const auto fit = fit_rabi(tr.sweep, tr.observable, RabiMode::sin2);
    const double f = fit.value("f_hz");
    o.detail << "coupling difference " << dj << " Hz, peak " << *peak << " at " << tr.sweep[static_cast<std::size_t>(peak - tr.observable.begin())]
             << " s, fitted f " << f << " Hz";
    o.check(std::abs(dj - 0.008) < 1e-12, "preset coupling difference");
    o.check(interior && single_hump, "not a single buildup then decline");
    o.check(synth::rel(f, dj) < 0.25, "f outside 25%");
}

void pumping(Outcome& o) {
    const auto p = make_preset("phe-gly-gly");
    Protocol q = regime::rabi(p.transfer, {1.0, 4.0, 8.0});
    q.kind = ProtocolKind::pumping;
    q.access = p.access;
    q.sweep_variable = SweepVariable::cycles;
    q.transfer_duration_s = 20.0;
    q.reset_delay_s = 3.1;
    q.envelope = RelaxationEnvelope::uniform_singlet(2, 25.0);
    const auto tr = run_pumping(p.system, q);
    const double one = tr.observable[0], four = tr.observable[1], eight = tr.observable[2];
    o.detail << "end-pair singlet after 1/4/8 cycles " << one << " / " << four << " / " << eight;
    o.check(four > one, "4 cycles not above 1 cycle");
    o.check(std::abs(eight - four) < 0.1 * four, "8 cycles differ from 4 by 10% or more");
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "cis/trans Rabi frequency", 60.0, rabi_frequency},
        {2, "nutation-difference operating points", 1.0, operating_points},
        {3, "null transfer with equal couplings", 10.0, null_transfer},
        {4, "numerical hygiene", 30.0, numerical_hygiene},
        {5, "effective two-level equivalence", 60.0, effective_model},
        {6, "double-Rabi period", 60.0, double_rabi_period},
        {7, "spin-lock phase independence", 60.0, phase_independence},
        {8, "resonance scan", 300.0, resonance_scan},
        {9, "fit round trips", 60.0, fit_round_trips},
        {10, "weak-coupling regime", 120.0, weak_coupling},
        {11, "pumping monotonicity", 120.0, pumping},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.detail << " [over runtime budget " << c.budget_s << " s]";
        }
        if (!o.pass) ++failures;
        std::printf("%s criterion %d (%s): %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.str().c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
