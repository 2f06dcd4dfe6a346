#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "grushin/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"grushin-lab: numerical laboratory for the Baouendi-Grushin "
                 "gauge geometry, Hardy-Rellich inequalities, and the "
                 "frequency-function machinery"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int threads = 0;

    const char* names[] = {"identities", "quad-selftest", "hardy",
                           "frequency",  "solve",         "report"};
    const char* descs[] = {
        "verify the structural identities of the gauge geometry",
        "quadrature self-tests (scaling, co-area, divergence identity)",
        "run the inequality checkers over the field catalog",
        "frequency profile, derivative identity, monotonicity, doubling",
        "assemble and solve the coupled bi-radial system",
        "merge all summaries in the output directory"};
    for (int i = 0; i < 6; ++i) {
        auto* sub = app.add_subcommand(names[i], descs[i]);
        sub->add_option("--config", config_path, "JSON experiment config")
            ->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--threads", threads, "worker threads (overrides config)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();
    return grushin::cli::run_command(cmd, config_path, out_dir, threads, std::cout);
}
