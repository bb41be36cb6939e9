// Exercises the CLI binary end to end: exit-status contract, byte-identical
// CSV reruns, manifest checksums. Invoked as:
//   krr_cli_tests <path-to-krr> <fixtures-dir>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <json.hpp>

#include "krr/csv.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (ok) {
        std::cout << "ok   " << what << "\n";
    } else {
        std::cout << "FAIL " << what << "\n";
        ++failures;
    }
}

int run(const std::string& cmd) {
    int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: krr_cli_tests <krr-binary> <fixtures-dir>\n";
        return 2;
    }
    const std::string krr = argv[1];
    const std::string fixtures = argv[2];
    const std::string work = fs::temp_directory_path() / "krr_cli_test";
    fs::remove_all(work);
    fs::create_directories(work);

    // exit 0 on a valid rate config, writes CSV and manifest
    check(run(krr + " rate --config " + fixtures + "/rate_small.json --out " + work + "/rate") == 0,
          "rate subcommand exits 0");
    check(fs::exists(work + "/rate/rate.csv"), "rate.csv written");
    check(fs::exists(work + "/rate/manifest.json"), "manifest written");

    // manifest checksum matches the emitted file
    {
        auto manifest = nlohmann::json::parse(krr::read_text_file(work + "/rate/manifest.json"));
        bool found = false;
        for (const auto& entry : manifest.at("outputs")) {
            if (entry.at("file") == "rate.csv") {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%016llx",
                              static_cast<unsigned long long>(krr::fnv1a64(
                                  krr::read_text_file(work + "/rate/rate.csv"))));
                found = entry.at("fnv1a64") == std::string(buf);
            }
        }
        check(found, "manifest checksum matches rate.csv");
    }

    // exit 2 on a config with an unknown key
    check(run(krr + " rate --config " + fixtures + "/bad_unknown_key.json --out " + work +
              "/bad1") == 2,
          "unknown key exits 2");
    // exit 2 when the kernel block is missing for spectrum
    check(run(krr + " spectrum --config " + fixtures + "/bad_missing_kernel.json --out " + work +
              "/bad2") == 2,
          "missing kernel exits 2");
    // exit 2 on a nonexistent config path
    check(run(krr + " rate --config " + fixtures + "/does_not_exist.json") == 2,
          "missing file exits 2");

    // md run twice with the same config + seed: byte-identical CSV
    check(run(krr + " md --config " + fixtures + "/md_tiny.json --out " + work + "/md1") == 0,
          "md run 1 exits 0");
    check(run(krr + " md --config " + fixtures + "/md_tiny.json --out " + work + "/md2") == 0,
          "md run 2 exits 0");
    check(krr::read_text_file(work + "/md1/md.csv") == krr::read_text_file(work + "/md2/md.csv"),
          "md.csv byte-identical across reruns");
    check(krr::read_text_file(work + "/md1/md_trials.csv") ==
              krr::read_text_file(work + "/md2/md_trials.csv"),
          "md_trials.csv byte-identical across reruns");

    // a different seed changes the CSV
    check(run(krr + " md --config " + fixtures + "/md_tiny.json --seed 777 --out " + work +
              "/md3") == 0,
          "md run with --seed exits 0");
    check(krr::read_text_file(work + "/md1/md.csv") !=
              krr::read_text_file(work + "/md3/md.csv"),
          "seed override changes the output");

    // threads must not change bytes
    check(run(krr + " md --config " + fixtures + "/md_tiny.json --threads 4 --out " + work +
              "/md4") == 0,
          "md run with --threads exits 0");
    check(krr::read_text_file(work + "/md1/md.csv") ==
              krr::read_text_file(work + "/md4/md.csv"),
          "threads do not change the output");

    // spectrum --oracle fixture
    check(run(krr + " spectrum --config " + fixtures + "/spectrum_oracle.json --out " + work +
              "/spec") == 0,
          "spectrum oracle exits 0");
    check(fs::exists(work + "/spec/spectrum_oracle.csv"), "spectrum_oracle.csv written");

    // smooth fixture
    check(run(krr + " smooth --config " + fixtures + "/smooth_small.json --out " + work +
              "/smooth") == 0,
          "smooth exits 0");
    check(fs::exists(work + "/smooth/smooth_fit.csv"), "smooth_fit.csv written");

    // fit via a sampled design + target
    check(run(krr + " fit --config " + fixtures + "/fit_small.json --out " + work + "/fit") == 0,
          "fit exits 0");
    check(fs::exists(work + "/fit/alpha.csv"), "alpha.csv written");

    // fit from a CSV design file
    {
        krr::write_text_file(work + "/design.csv",
                             "1.0,0.5,0.0\n-0.5,1.0,0.5\n0.0,-1.0,1.0\n0.7,0.2,-0.3\n");
        krr::write_text_file(work + "/y.csv", "1.0\n0.5\n-0.5\n0.2\n");
        nlohmann::json cfg = {
            {"experiment", "fit"},
            {"kernel",
             {{"type", "inner_product_poly"}, {"coeffs", {1.0, 1.0}}, {"d", 3}}},
            {"design_file", work + "/design.csv"},
            {"response_file", work + "/y.csv"},
            {"lambda", 0.1}};
        krr::write_text_file(work + "/fit_file.json", cfg.dump());
        check(run(krr + " fit --config " + work + "/fit_file.json --out " + work + "/fitf") == 0,
              "fit from CSV design exits 0");
    }

    // exit 3 on a non-finite kernel evaluation
    {
        krr::write_text_file(work + "/design_inf.csv", "1.0,inf,0.0\n0.0,1.0,0.0\n");
        krr::write_text_file(work + "/y2.csv", "1.0\n0.5\n");
        nlohmann::json cfg = {
            {"experiment", "fit"},
            {"kernel",
             {{"type", "inner_product_poly"}, {"coeffs", {1.0, 1.0}}, {"d", 3}}},
            {"design_file", work + "/design_inf.csv"},
            {"response_file", work + "/y2.csv"},
            {"lambda", 0.1}};
        krr::write_text_file(work + "/fit_inf.json", cfg.dump());
        check(run(krr + " fit --config " + work + "/fit_inf.json --out " + work + "/fit3") == 3,
              "non-finite kernel evaluation exits 3");
    }

    std::cout << (failures == 0 ? "ALL CLI CHECKS PASSED\n" : "CLI CHECKS FAILED\n");
    return failures == 0 ? 0 : 1;
}
