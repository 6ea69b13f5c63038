#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "foreaction/bench.hpp"

using namespace foreaction;

int main(int argc, char** argv) {
    CLI::App app{"Depth-sweep benchmark harness for the speculation engine"};

    std::string workload = "stat-loop";
    std::string depths = "0,1,4,16";
    std::string executor = "sim";
    std::string device_config;
    std::uint64_t seed = 1;
    std::uint32_t reps = 1;
    std::uint32_t clients = 1;
    std::string out_path;

    app.add_option("--workload", workload,
                   "stat-loop | copy-loop | bptree-load | bptree-scan | lsm-get");
    app.add_option("--depths", depths, "comma-separated pre-issuing depths");
    app.add_option("--executor", executor, "sim | worker-pool");
    app.add_option("--device-config", device_config, "key=value device parameter file");
    app.add_option("--seed", seed, "fixture seed");
    app.add_option("--reps", reps, "repetitions per configuration")->check(CLI::PositiveNumber);
    app.add_option("--clients", clients, "concurrent sessions on separate threads");
    app.add_option("--out", out_path, "CSV output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    bench::BenchSpec spec;
    auto wk = bench::workload_from_string(workload);
    if (!wk) {
        std::cerr << "unknown workload: " << workload << "\n";
        return 2;
    }
    spec.workload = *wk;
    auto ek = bench::executor_from_string(executor);
    if (!ek) {
        std::cerr << "unknown executor: " << executor << "\n";
        return 2;
    }
    spec.executor = *ek;
    spec.seed = seed;
    spec.reps = reps;
    spec.clients = clients;

    spec.depths.clear();
    std::stringstream ds(depths);
    std::string tok;
    while (std::getline(ds, tok, ','))
        if (!tok.empty()) spec.depths.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
    if (spec.depths.empty()) {
        std::cerr << "no depths given\n";
        return 2;
    }

    // Quick-experiment override: one depth for the whole sweep.
    if (const char* env = std::getenv("FOREACTION_DEPTH")) {
        spec.depths = {static_cast<std::uint32_t>(std::stoul(env))};
    }

    try {
        if (!device_config.empty())
            spec.device = DeviceModel::load_config_file(device_config);
        auto rows = bench::run_bench(spec);
        if (out_path.empty()) {
            bench::write_csv(std::cout, rows);
        } else {
            std::ofstream f(out_path);
            if (!f) {
                std::cerr << "cannot open " << out_path << "\n";
                return 2;
            }
            bench::write_csv(f, rows);
        }
        if (!bench::all_synchrony_ok(rows)) {
            std::cerr << "synchrony violation detected\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
