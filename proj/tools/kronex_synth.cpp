// Writes a deterministic synthetic ratings CSV with power-law user/item
// popularity and a decaying latent spectrum, for demo runs and tests where
// no real dataset is on disk.

#include <iostream>

#include <CLI11.hpp>

#include "kronex/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic ratings CSV"};
    std::string output;
    kronex::SyntheticConfig config;
    app.add_option("--output", output, "CSV path")->required();
    app.add_option("--users", config.n_users, "distinct users");
    app.add_option("--items", config.n_items, "distinct items");
    app.add_option("--ratings", config.target_ratings, "target rating count");
    app.add_option("--seed", config.seed, "generator seed");

    try {
        app.parse(argc, argv);
        kronex::write_synthetic_csv(output, config);
        std::cout << "wrote " << output << "\n";
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
