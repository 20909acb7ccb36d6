#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include <sys/wait.h>

#include "phonoloc/cli/config.hpp"
#include "phonoloc/cli/output.hpp"
#include "phonoloc/cli/presets.hpp"
#include "phonoloc/cli/runner.hpp"

using namespace phonoloc;
using namespace phonoloc::cli;
namespace fs = std::filesystem;

namespace {

struct Proc {
    int code = -1;
    std::string out;
};

// Runs the tool through the shell; stderr is discarded unless `keep_err`.
Proc tool(const std::string& args, const std::string& env = "", bool keep_err = false) {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" PHONOLOC_TOOL "' " + args +
                            (keep_err ? " 2>&1" : " 2>/dev/null");
    Proc p;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) p.out.append(buf.data(), n);
    const int status = pclose(pipe);
    p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("phonoloc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

const char* kSmallLocalization = R"(experiment = "localization"

[chain]
n_ions = 20
beta = 0.05

[disorder]
model = "product"
p = 0.5
U_over_t = 1.0

[sampling]
samples = 40
seed = 9
enumeration_cap = 0
)";

std::string error_of(const std::string& toml) {
    try {
        resolve(parse_toml(toml, "test.toml"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("unknown keys are rejected with their location") {
    const auto msg = error_of("experiment = \"modes\"\n[chain]\nn_ions = 4\nbeta = 0.05\nbogus = 3\n");
    CHECK(msg.find("test.toml:5") != std::string::npos);
    CHECK(msg.find("'chain.bogus'") != std::string::npos);
    CHECK(error_of("experiment = \"modes\"\ncolour = 1\n[chain]\nn_ions = 4\n").find("'colour'") != std::string::npos);
}

TEST_CASE("missing and invalid values are named") {
    CHECK(error_of("experiment = \"localization\"\n[chain]\nbeta = 0.05\n").find("chain.n_ions") != std::string::npos);
    CHECK(error_of("experiment = \"modes\"\n[chain]\nn_ions = 4\nbeta = -0.1\n").find("chain.beta") != std::string::npos);
    CHECK(error_of("experiment = \"warp\"\n[chain]\nn_ions = 4\n").find("experiment") != std::string::npos);
    CHECK(error_of("experiment = \"localization\"\n[chain]\nn_ions = 4\n[disorder]\nU_over_t = [0.1, 0.2]\n")
              .find("U_over_t") != std::string::npos);
    CHECK(error_of("experiment = \"modes\"\n[chain]\nn_ions = \"four\"\n").find("chain.n_ions") != std::string::npos);
    CHECK_FALSE(error_of("experiment = \"modes\"\n[chain]\nn_ions = 4\n").size() > 0);
}

TEST_CASE("defaults and weak-coupling warning") {
    const auto cfg = resolve(parse_toml("experiment = \"dynamics\"\n[chain]\nn_ions = 8\n", "x"));
    CHECK(cfg.chain.beta == 0.05);
    CHECK(cfg.sampling.n_samples == 200);
    CHECK(cfg.sampling.seed == 0);
    CHECK(cfg.warnings.empty());
    const auto strong = resolve(parse_toml("experiment = \"modes\"\n[chain]\nn_ions = 4\nbeta = 0.5\n", "x"));
    REQUIRE(strong.warnings.size() == 1);
    CHECK(strong.warnings[0].find("beta") != std::string::npos);
}

TEST_CASE("resolved config survives a JSON round trip") {
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const auto cfg = resolve(preset(name));
        const auto doc = to_json(cfg);
        const auto again = resolve(parse_json(doc.dump(), "round-trip"));
        CHECK(to_json(again) == doc);
    }
}

TEST_CASE("explicit disorder file") {
    TempDir dir;
    dir.write("spins.json", R"({"configs": [{"bits": "0110", "weight": 0.25}, {"bits": "1001", "weight": 0.75}]})");
    const auto path = dir.write("cfg.toml", "experiment = \"dynamics\"\n[chain]\nn_ions = 4\n"
                                            "[disorder]\nmodel = \"explicit\"\nfile = \"spins.json\"\nU_over_t = 0.5\n");
    const auto cfg = resolve(load_config(path));
    CHECK(cfg.disorder.model == "explicit");

    dir.write("bad.toml", "experiment = \"dynamics\"\n[chain]\nn_ions = 5\n"
                          "[disorder]\nmodel = \"explicit\"\nfile = \"spins.json\"\n");
    CHECK_THROWS_AS(resolve(load_config(dir.path / "bad.toml")), ConfigError);
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5e-7, 0.0}) {
        CHECK(std::stod(format_number(x)) == x);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(2.0) == "2");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    CsvTable t({{"a", ""}, {"b", "omega_t"}});
    t.row({"1", "2"});
    CHECK(t.render() == "a,b\n1,2\n");
    CHECK_THROWS(t.row({"1"}));
}

TEST_CASE("table1 derived frequencies in hertz") {
    const auto p = tool("validate --preset table1");
    REQUIRE(p.code == 0);
    const auto end = p.out.rfind('}');
    const auto doc = Json::parse(p.out.substr(0, end + 1));
    const auto& hz = doc["derived"]["hz"];
    CHECK(hz["t"].get<double>() == doctest::Approx(5e5));
    CHECK(std::abs(hz["U_laser"].get<double>()) == doctest::Approx(1e4));
    CHECK(hz["J"].get<double>() == doctest::Approx(5e3));
    CHECK(p.out.find("t = 500 kHz, |U| = 10 kHz, J = 5 kHz") != std::string::npos);
}

TEST_CASE("config errors exit 2 and write nothing") {
    TempDir dir;
    const auto cfg = dir.write("neg.toml", "experiment = \"modes\"\nout = \"" + (dir.path / "o").string() +
                                               "\"\n[chain]\nn_ions = 4\nbeta = -0.05\n");
    const auto p = tool("modes -c '" + cfg.string() + "'", "", true);
    CHECK(p.code == 2);
    CHECK(p.out.find("chain.beta") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "o"));

    CHECK(tool("modes --no-such-flag").code == 2);
    CHECK(tool("modes").code == 2);
    CHECK(tool("dynamics -p table1").code == 2);  // preset names a different experiment
}

TEST_CASE("instability exits 3, unwritable output exits 4") {
    TempDir dir;
    const auto cfg = dir.write("hot.toml", "experiment = \"modes\"\nout = \"" + (dir.path / "o").string() +
                                               "\"\n[chain]\nn_ions = 10\nbeta = 1.0\n");
    CHECK(tool("modes -c '" + cfg.string() + "'").code == 3);
    CHECK_FALSE(fs::exists(dir.path / "o"));

    const auto ok = dir.write("ok.toml", kSmallLocalization);
    CHECK(tool("run -c '" + ok.string() + "' --out /dev/null/x").code == 4);
}

TEST_CASE("localization outputs, manifest and reproducibility") {
    TempDir dir;
    const auto cfg = dir.write("loc.toml", kSmallLocalization);
    const auto a = dir.path / "a", b = dir.path / "b", c = dir.path / "c";
    REQUIRE(tool("localization -c '" + cfg.string() + "' --threads 1 --out '" + a.string() + "'").code == 0);
    REQUIRE(tool("run -c '" + cfg.string() + "' --threads 4 --out '" + b.string() + "'").code == 0);

    const auto profile = slurp(a / "profile.csv");
    CHECK(profile.rfind("site,distance,mean_n,stderr\n", 0) == 0);
    CHECK(std::count(profile.begin(), profile.end(), '\n') == 21);

    const auto manifest = Json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["manifest_version"] == 1);
    CHECK(manifest["experiment"] == "localization");
    CHECK(manifest["threads"] == 1);
    CHECK(manifest["config"]["sampling"]["seed"] == 9);

    std::set<std::string> listed;
    for (const auto& entry : manifest["outputs"]) {
        const auto name = entry["file"].get<std::string>();
        CHECK(listed.insert(name).second);
        const auto bytes = slurp(a / name);
        CHECK(entry["sha256"] == sha256_hex(bytes));
        CHECK(entry["bytes"] == bytes.size());
        // output files do not depend on the number of workers
        CHECK(bytes == slurp(b / name));
    }
    std::set<std::string> on_disk;
    for (const auto& f : fs::directory_iterator(a)) on_disk.insert(f.path().filename().string());
    on_disk.erase("manifest.json");
    CHECK(listed == on_disk);
    CHECK(listed.count("profile.csv") == 1);
    CHECK(listed.count("summary.json") == 1);

    // a manifest is itself a runnable config
    REQUIRE(tool("run -c '" + (a / "manifest.json").string() + "' --out '" + c.string() + "'").code == 0);
    for (const auto& name : listed) CHECK(slurp(a / name) == slurp(c / name));
}

TEST_CASE("thread count from the environment is recorded") {
    TempDir dir;
    const auto cfg = dir.write("loc.toml", kSmallLocalization);
    REQUIRE(tool("run -c '" + cfg.string() + "' --out '" + (dir.path / "o").string() + "'", "PHONOLOC_THREADS=3")
                .code == 0);
    CHECK(Json::parse(slurp(dir.path / "o" / "manifest.json"))["threads"] == 3);
}

TEST_CASE("every experiment produces its files") {
    TempDir dir;
    struct Case {
        std::string toml;
        std::vector<std::string> files;
    };
    const std::vector<Case> cases{
        {"experiment = \"modes\"\n[chain]\nn_ions = 3\n", {"modes.csv", "wavefunctions.csv", "local_modes.csv"}},
        {"experiment = \"dynamics\"\n[chain]\nn_ions = 6\n[dynamics]\ntimes = [0.0, 10.0]\n[sampling]\nsamples = 4\n",
         {"density.csv", "spread.csv"}},
        {"experiment = \"spectrum\"\n[chain]\nn_ions = 6\n[disorder]\nU_over_t = [0.0, 0.5]\n[spectrum]\nbins = 50\n",
         {"spectrum.csv"}},
        {"experiment = \"com-scaling\"\n[chain]\nbeta = 0.05\n[com]\nn_values = [2, 4]\n[sampling]\nsamples = 10\n",
         {"com_scaling.csv"}},
        {"experiment = \"ldos\"\n[chain]\nn_ions = 6\n[disorder]\nmodel = \"dimer\"\nU_over_t = 0.25\n"
         "[spectrum]\nbins = 40\n[ldos]\nmodels = [\"product\", \"dimer\"]\npr_sizes = [6, 8]\n",
         {"ldos.csv", "participation.csv"}},
        {"experiment = \"manybody\"\n[chain]\nn_ions = 3\n[disorder]\nU_over_t = 1.0\n[sampling]\nsamples = 8\n",
         {"ground_density.csv", "gaps.csv", "summary.json"}},
    };
    int k = 0;
    for (const auto& c : cases) {
        CAPTURE(c.toml);
        const auto cfg = dir.write("e" + std::to_string(k) + ".toml", c.toml);
        const auto out = dir.path / ("out" + std::to_string(k++));
        const auto p = tool("run -c '" + cfg.string() + "' --out '" + out.string() + "'", "", true);
        CAPTURE(p.out);
        REQUIRE(p.code == 0);
        for (const auto& f : c.files) CHECK(fs::exists(out / f));
        CHECK(fs::exists(out / "manifest.json"));
    }
}

TEST_CASE("presets listing") {
    const auto p = tool("presets");
    CHECK(p.code == 0);
    for (const auto& name : preset_names()) CHECK(p.out.find(name) != std::string::npos);
    CHECK_THROWS_AS(preset("nope"), ConfigError);
}
