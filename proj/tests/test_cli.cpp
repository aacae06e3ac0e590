#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

const std::string kCli = XDUCT_CLI_PATH;
const std::string kData = XDUCT_DATA_DIR;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string out_path = "cli_out.tmp";
    const std::string cmd = kCli + " " + args + " > " + out_path + " 2> cli_err.tmp";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    std::ifstream in(out_path);
    std::ostringstream os;
    os << in.rdbuf();
    r.output = os.str();
    return r;
}

json run_json(const std::string& args, int expect_code = 0) {
    const RunResult r = run(args);
    REQUIRE(r.exit_code == expect_code);
    return json::parse(r.output);
}

// Subset JSON-Schema check: "type", "required", and property types.
bool type_matches(const json& schema_type, const json& value) {
    if (schema_type.is_array()) {
        for (const auto& t : schema_type) {
            if (type_matches(t, value)) {
                return true;
            }
        }
        return false;
    }
    const std::string t = schema_type.get<std::string>();
    if (t == "number") return value.is_number();
    if (t == "integer") return value.is_number_integer();
    if (t == "string") return value.is_string();
    if (t == "boolean") return value.is_boolean();
    if (t == "object") return value.is_object();
    if (t == "array") return value.is_array();
    if (t == "null") return value.is_null();
    return false;
}

void check_schema(const json& doc, const std::string& schema_file) {
    std::ifstream in(kData + "/schemas/" + schema_file);
    REQUIRE(in.good());
    json schema;
    in >> schema;
    REQUIRE(type_matches(schema.at("type"), doc));
    for (const auto& key : schema.at("required")) {
        INFO("required key: ", key.get<std::string>());
        CHECK(doc.contains(key.get<std::string>()));
    }
    if (schema.contains("properties")) {
        for (const auto& [key, sub] : schema.at("properties").items()) {
            if (doc.contains(key) && sub.contains("type")) {
                INFO("property: ", key);
                CHECK(type_matches(sub.at("type"), doc.at(key)));
            }
        }
    }
}

} // namespace

TEST_CASE("m2o-efficiency at 0 dBm reproduces the readout operating point") {
    const json j =
        run_json("m2o-efficiency --card " + kData + "/tableS1.json --power-dbm 0");
    check_schema(j, "m2o_efficiency.schema.json");
    CHECK(j.at("eta_eo").get<double>() == doctest::Approx(1.3e-4).epsilon(0.15));
    CHECK(j.at("power_w").get<double>() == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("m2o-efficiency probe sweep emits the spectrum csv") {
    const RunResult r = run("m2o-efficiency --card " + kData +
                            "/tableS1.json --power-dbm 10 --probe-sweep -50e6:50e6:1e6");
    CHECK(r.exit_code == 0);
    CHECK(r.output.rfind("detuning_hz,mag2\n", 0) == 0);
    // 101 samples + header
    CHECK(std::count(r.output.begin(), r.output.end(), '\n') == 102);
}

TEST_CASE("m2o-efficiency demands exactly one power specification") {
    const RunResult r =
        run("m2o-efficiency --card " + kData + "/tableS1.json --power-dbm 0 --power-w 1e-3");
    CHECK(r.exit_code == 1);
}

TEST_CASE("plan reproduces the 1.7 GHz pump detuning for the readout target") {
    const json j = run_json("plan --target-hz 7.339e9 --comb " + kData + "/comb.json --m2o " +
                            kData + "/m2o_tune.json");
    check_schema(j, "plan.schema.json");
    REQUIRE(j.at("feasible").get<bool>());
    CHECK(std::abs(j.at("f_pump_conv_hz").get<double>() - 1.70e9) <= 38e6);
    CHECK(j.at("f_pump_amp_hz").get<double>() ==
          2.0 * j.at("f_idler_hz").get<double>());
}

TEST_CASE("plan with a negative target exits 1") {
    const RunResult r = run("plan --target-hz -1 --comb " + kData + "/comb.json --m2o " + kData +
                            "/m2o_tune.json");
    CHECK(r.exit_code == 1);
}

TEST_CASE("coverage of the band around the readout") {
    const json j = run_json("coverage --band 7.0e9:7.7e9 --signal-only --comb " + kData +
                            "/comb.json --m2o " + kData + "/m2o_tune.json");
    check_schema(j, "coverage.schema.json");
    CHECK(j.at("fraction").get<double>() == doctest::Approx(0.78).epsilon(0.04));
    CHECK_FALSE(j.at("idler_gated").get<bool>());
}

TEST_CASE("schedule emits the transduction defaults as csv") {
    const RunResult r = run("schedule --kind transduction");
    CHECK(r.exit_code == 0);
    std::istringstream is(r.output);
    std::string line;
    std::getline(is, line);
    CHECK(line == "channel,start_s,duration_s");
    std::getline(is, line);
    CHECK(line.rfind("mm_pump,0,", 0) == 0);
    CHECK(line.find("6.0000000000000002e-06") != std::string::npos);
    std::getline(is, line);
    CHECK(line.rfind("laser,", 0) == 0);
    std::getline(is, line);
    CHECK(line.rfind("probe,", 0) == 0);
}

TEST_CASE("fit-flux recovers the quadratic coefficient from the endpoint pair") {
    {
        std::ofstream out("flux_pts.csv");
        out << "b_mT,f_hz\n0,5.669e9\n4,5.579e9\n";
    }
    const json j = run_json("fit-flux --in flux_pts.csv");
    std::remove("flux_pts.csv");
    check_schema(j, "flux_fit.schema.json");
    CHECK(j.at("k_per_mT2").get<double>() ==
          doctest::Approx((90e6 / 5.669e9) / 16.0).epsilon(1e-9));
}

TEST_CASE("fit-snr recovers the composite parameter and reports the bound") {
    {
        std::ofstream out("snr_pts.csv");
        out << "gain_db,delta_snr_db\n";
        for (double g_db = 0.0; g_db <= 30.0; g_db += 3.0) {
            const double g = std::pow(10.0, g_db / 10.0);
            const double snr = g * 11.4 / (0.30 * g + 10.9);
            out << g_db << "," << 10.0 * std::log10(snr) << "\n";
        }
    }
    const json j = run_json("fit-snr --in snr_pts.csv --n-hemt 10.9 --eta-min 0.16");
    std::remove("snr_pts.csv");
    check_schema(j, "snr_fit.schema.json");
    CHECK(j.at("p").get<double>() == doctest::Approx(0.30).epsilon(1e-6));
    CHECK(j.at("n_add_bound").get<double>() == doctest::Approx(1.375).epsilon(1e-6));
    CHECK(j.at("asymptotic_delta_snr_db").get<double>() == doctest::Approx(15.8).epsilon(0.001));
}

TEST_CASE("fit-noise recovers gain and added noise from a clean sweep") {
    {
        std::ofstream out("vts_pts.csv");
        out << "n_ex,s_out\n";
        for (double n = 0.0; n <= 15.0; n += 3.0) {
            out << n << "," << 1e5 * (n + 12.0) << "\n";
        }
    }
    const json j = run_json("fit-noise --in vts_pts.csv");
    std::remove("vts_pts.csv");
    check_schema(j, "noise_fit.schema.json");
    CHECK(j.at("gain").get<double>() == doctest::Approx(1e5).epsilon(1e-9));
    CHECK(j.at("gain_db").get<double>() == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(j.at("n_amp").get<double>() == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("fit-qubit t1 on a clean decay") {
    {
        std::ofstream out("t1_pts.csv");
        out << "time_s,population\n";
        for (int i = 0; i < 50; ++i) {
            const double t = 150e-6 * i / 49.0;
            out << t << "," << std::exp(-t / 30.9e-6) << "\n";
        }
    }
    const json j = run_json("fit-qubit --kind t1 --in t1_pts.csv");
    std::remove("t1_pts.csv");
    check_schema(j, "qubit_fit.schema.json");
    CHECK(j.at("params").at("t1_s").get<double>() == doctest::Approx(30.9e-6).epsilon(1e-6));
}

TEST_CASE("fit-qubit rejects an unknown kind") {
    const RunResult r = run("fit-qubit --kind t3 --in nowhere.csv");
    CHECK(r.exit_code == 1);
}

TEST_CASE("m2m-scatter sweep reports conversion and stability") {
    const RunResult r = run("m2m-scatter --params " + kData +
                            "/mm_tableS1.json --sweep -1e6:1e6:1e5");
    CHECK(r.exit_code == 0);
    std::istringstream is(r.output);
    std::string header;
    std::getline(is, header);
    CHECK(header == "omega_hz,s_ba_mag2,s_bb_gain_max,s_bb_gain_min,stable");
    double best = 0.0;
    std::string line;
    while (std::getline(is, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double w = 0.0;
        double s_ba = 0.0;
        double hi = 0.0;
        double lo = 0.0;
        double stable = -1.0;
        ls >> w >> s_ba >> hi >> lo >> stable;
        CHECK(stable == 1.0);
        if (w == 0.0) {
            best = s_ba;
        }
    }
    // C = 1 peak conversion with the measured rates
    CHECK(best == doctest::Approx((102.0 / 177.0) * (565.0 / 758.0)).epsilon(1e-9));
}

TEST_CASE("m2m-scatter past the parametric threshold exits 2") {
    const RunResult r = run("m2m-scatter --params " + kData +
                            "/mm_tableS1.json --g-hz 0 --eps-hz 5e5 --sweep -1e6:1e6:1e6");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("stable") != std::string::npos);  // csv still written
}

TEST_CASE("chain composes efficiency and labels the noise model") {
    const json j = run_json("chain --eta-mo 1.3e-3 --eta-mm 0.5 --n-add-mm 1.3 --n-add-mo 3.1");
    check_schema(j, "chain.schema.json");
    CHECK(j.at("eta").get<double>() == doctest::Approx(6.5e-4).epsilon(1e-12));
    CHECK(j.at("n_added_input_referred").get<double>() ==
          doctest::Approx(1.3 + 3.1 / 0.5).epsilon(1e-12));
    CHECK(j.at("note").get<std::string>().find("model extension") != std::string::npos);
}

TEST_CASE("every subcommand exposes --help with exit 0") {
    for (const char* sub :
         {"m2o-efficiency", "m2m-scatter", "plan", "coverage", "schedule", "fit-flux", "fit-snr",
          "fit-noise", "fit-qubit", "chain"}) {
        const RunResult r = run(std::string(sub) + " --help");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("--out") != std::string::npos);
    }
    CHECK(run("--help").exit_code == 0);
}

TEST_CASE("unknown flags exit 1") {
    CHECK(run("plan --bogus 1").exit_code == 1);
    CHECK(run("no-such-subcommand").exit_code == 1);
}

TEST_CASE("repeated runs are byte-identical") {
    const std::string args = "m2o-efficiency --card " + kData +
                             "/tableS1.json --power-sweep 1e-3:1e-2:1e-3 --seed 7";
    const RunResult a = run(args);
    const RunResult b = run(args);
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);

    // and with a worker pool: identical rows, ordered by sweep index
    const int rc = std::system(("XDUCT_NUM_WORKERS=4 " + kCli + " " + args +
                                " > cli_par.tmp 2> cli_err.tmp")
                                   .c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    std::ifstream in("cli_par.tmp");
    std::ostringstream os;
    os << in.rdbuf();
    CHECK(os.str() == a.output);
    std::remove("cli_par.tmp");
}

TEST_CASE("--out writes the file instead of stdout") {
    const RunResult r = run("schedule --kind qubit-readout --delay-us 3 --out sched.tmp");
    CHECK(r.exit_code == 0);
    CHECK(r.output.empty());
    std::ifstream in("sched.tmp");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "channel,start_s,duration_s");
    std::remove("sched.tmp");
}
