#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "rfsei/error.hpp"
#include "rfsei/eval.hpp"
#include "rfsei/rng.hpp"

using namespace rfsei;

namespace {

std::string first_line(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

DatasetSpec grid_spec()
{
    DatasetSpec s;
    s.n_train = 10;
    s.n_val = 0;
    s.n_test = 0;
    s.frame_len = 512;
    s.master_seed = 3;
    return s;
}

EvalGrid small_grid()
{
    EvalGrid g;
    g.start = -0.5;
    g.stop = 0.5;
    g.step = 0.25;
    g.frames_per_value = 20;
    g.snr_values = {0.0, 10.0};
    return g;
}

}  // namespace

TEST_SUITE("estimator-eval")
{
    TEST_CASE("NMSE hand cases")
    {
        const std::vector<double> a = {0.4, 0.7, 1.3};
        CHECK(nmse(a, a) == 0.0);
        const std::vector<double> p = {2, 2}, m = {1, 1};
        CHECK(std::abs(nmse(p, m) - 0.5) < 1e-12);
        const std::vector<double> p2 = {3, 1}, m2 = {1, 3};
        CHECK(std::abs(nmse(p2, m2) - 1.0) < 1e-12);
    }

    TEST_CASE("NMSE symmetry and scale invariance")
    {
        auto rng = make_rng(2);
        std::uniform_real_distribution<double> u(0.1, 2.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> p(17), m(17);
            for (auto& v : p)
                v = u(rng);
            for (auto& v : m)
                v = u(rng);
            const double base = nmse(p, m);
            CHECK(nmse(m, p) == doctest::Approx(base).epsilon(1e-12));
            for (double c : {1e-3, 0.5, 7.0, 1e4}) {
                std::vector<double> cp(p), cm(m);
                for (auto& v : cp)
                    v *= c;
                for (auto& v : cm)
                    v *= c;
                CHECK(nmse(cp, cm) == doctest::Approx(base).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("NMSE is undefined for non-positive mean products")
    {
        const std::vector<double> p = {-1, 1}, m = {0.5, 0.2};
        CHECK_THROWS_AS(nmse(p, m), Error);
        const std::vector<double> q = {-1, -2}, n = {1, 2};
        try {
            nmse(q, n);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Numeric);
        }
        const std::vector<double> empty;
        CHECK_THROWS_AS(nmse(empty, empty), Error);
        CHECK(mse(p, m) == doctest::Approx((2.25 + 0.64) / 2));
    }

    TEST_CASE("bias curve recovers injected bias and variance")
    {
        auto rng = make_rng(7);
        std::normal_distribution<double> nd(0.1, 0.2);
        std::vector<double> est, truth;
        for (double t : {-0.5, 0.0, 0.4})
            for (int i = 0; i < 1000; ++i) {
                truth.push_back(t);
                est.push_back(t + nd(rng));
            }
        const auto bc = bias_curve(est, truth);
        REQUIRE(bc.size() == 3);
        CHECK(bc[0].truth == -0.5);
        for (const auto& p : bc) {
            CHECK(std::abs(p.bias - 0.1) < 0.02);
            CHECK(p.sample_variance == doctest::Approx(0.04).epsilon(0.2));
            CHECK(p.n == 1000);
            CHECK(p.cma.size() == 1000);
        }

        const auto exact = bias_curve(truth, truth);
        for (const auto& p : exact) {
            CHECK(p.bias == 0.0);
            CHECK(p.sample_variance == 0.0);
        }
        const std::vector<double> one = {0.1, 0.2}, t2 = {0.1, 0.3};
        CHECK_THROWS_AS(bias_curve(one, t2), Error);
    }

    TEST_CASE("final CMA value equals the arithmetic mean")
    {
        const std::vector<double> v = {0.5, 1.5, 2.0, 4.0};
        const auto c = cumulative_moving_average(v);
        CHECK(c == std::vector<double>{0.5, 1.0, 4.0 / 3.0, 2.0});
        auto rng = make_rng(3);
        std::normal_distribution<double> nd;
        std::vector<double> w(999);
        for (auto& x : w)
            x = nd(rng);
        double sum = 0.0;
        for (double x : w)
            sum += x;
        CHECK(cumulative_moving_average(w).back() == sum / 999.0);
    }

    TEST_CASE("error statistics per SNR")
    {
        const std::vector<double> e = {1.0, 2.0, 0.0, 0.0}, t = {0.5, 0.5, 0.0, 1.0}, s = {10, 10, 0, 0};
        const auto st = error_by_snr(e, t, s);
        REQUIRE(st.size() == 2);
        CHECK(st[0].snr_db == 0.0);
        CHECK(st[0].mean_err == -0.5);
        CHECK(st[1].mean_err == 1.0);
        CHECK(st[1].std_err == doctest::Approx(std::sqrt(0.5)));
    }

    TEST_CASE("perfect oracle has zero error at every SNR")
    {
        DatasetSpec spec = grid_spec();
        const OracleEstimator oracle(Target::GainImbalance);
        const std::vector<double> snrs = {0, 10, 25};
        const auto st = snr_sweep(oracle, spec, snrs, 30);
        REQUIRE(st.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(st[i].snr_db == snrs[i]);
            CHECK(st[i].mean_err == 0.0);
            CHECK(st[i].std_err == 0.0);
            CHECK(st[i].n == 30);
        }

        const OracleEstimator noisy(Target::GainImbalance, 0.01, 0.05, 4);
        const auto ns = snr_sweep(noisy, spec, snrs, 400);
        for (const auto& s : ns) {
            CHECK(std::abs(s.mean_err - 0.01) < 0.01);
            CHECK(s.std_err == doctest::Approx(0.05).epsilon(0.15));
        }
    }

    TEST_CASE("grid evaluation splits by SNR")
    {
        const auto spec = grid_spec();
        const auto grid = build_eval_grid(spec, small_grid());
        const OracleEstimator noisy(Target::GainImbalance, 0.0, 0.05, 11);
        const auto ge = evaluate_grid(noisy, grid);
        CHECK(ge.estimates.size() == grid.size());
        CHECK(ge.bias_by_snr.size() == 2);
        CHECK(ge.bias_by_snr.at(10.0).size() == 5);
        CHECK(ge.pearson() > 0.9);
        CHECK(ge.pearson_at(0.0) > 0.9);
        CHECK(ge.mean_sample_variance(10.0) == doctest::Approx(0.0025).epsilon(0.3));
        CHECK(ge.mean_abs_bias(0.0) < 0.03);
        CHECK_THROWS_AS(ge.mean_abs_bias(5.0), Error);

        const OracleEstimator phase(Target::PhaseImbalance);
        CHECK_THROWS_AS(evaluate_grid(phase, grid), Error);
    }

    TEST_CASE("reports are deterministic and carry the documented headers")
    {
        const auto spec = grid_spec();
        const auto grid = build_eval_grid(spec, small_grid());
        const OracleEstimator noisy(Target::GainImbalance, 0.02, 0.05, 11);
        const auto r1 = make_report(noisy, grid, {{"model", "oracle"}});
        const auto r2 = make_report(noisy, grid, {{"model", "oracle"}});
        CHECK(r1.grid.estimates == r2.grid.estimates);
        CHECK(r1.summary_json() == r2.summary_json());
        // Gain truths are centred on zero, so the NMSE normalization is undefined here.
        CHECK_FALSE(r1.nmse.has_value());
        CHECK_FALSE(r1.nmse_note.empty());
        CHECK(r1.mse > 0.0);

        const std::filesystem::path d1 = std::filesystem::path(RFSEI_TEST_TMP) / "report_a";
        const std::filesystem::path d2 = std::filesystem::path(RFSEI_TEST_TMP) / "report_b";
        write_report(d1, r1);
        write_report(d2, r2);
        CHECK(first_line(d1 / "bias_curve.csv") == "truth,bias,sample_variance,snr_db");
        CHECK(first_line(d1 / "snr_sweep.csv") == "snr_db,mean_err,std_err,n");
        CHECK(first_line(d1 / "scatter.csv") == "truth,estimate,snr_db");
        for (const char* f : {"bias_curve.csv", "snr_sweep.csv", "scatter.csv", "summary.json"})
            CHECK(slurp(d1 / f) == slurp(d2 / f));
        const auto summary = nlohmann::json::parse(slurp(d1 / "summary.json"));
        CHECK(summary["nmse"].is_null());
        CHECK(summary["metadata"]["model"] == "oracle");
    }

    TEST_CASE("input-size table")
    {
        const auto spec = grid_spec();
        const auto grid = build_eval_grid(spec, small_grid());
        const OracleEstimator a(Target::GainImbalance, 0.0, 0.08, 1), b(Target::GainImbalance, 0.0, 0.04, 2);
        const auto ea = evaluate_grid(a, grid), eb = evaluate_grid(b, grid);
        const auto rows = input_size_study({{512, &ea}, {1024, &eb}});
        CHECK(rows.size() == 4);
        for (const auto& r : rows)
            CHECK(r.mean_sample_variance > 0.0);
        const auto csv = input_size_csv(rows);
        CHECK(csv.rfind("frame_len,snr_db,mean_abs_bias,mean_sample_variance\n", 0) == 0);
    }
}
