#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include <doctest.h>

#include "vti/config.hpp"
#include "vti/errors.hpp"
#include "vti/rng.hpp"

using namespace vti;

TEST_CASE("default config round-trips through text exactly") {
    RunConfig config;
    const std::string text = config_to_string(config);
    RunConfig parsed;
    parsed.seed = 0;  // scramble a few fields so parsing must restore them
    parsed.scene_kind = "x";
    parsed.solver.learning_rate = -1.0;
    parse_config_text(text, parsed);
    CHECK(config_to_string(parsed) == text);
    CHECK(parsed.seed == 7);
    CHECK(parsed.scene_kind == "checker_shadow");
    CHECK(parsed.solver.learning_rate == 0.002);
    CHECK(std::isinf(parsed.max_si_mse_albedo));
}

TEST_CASE("doubles survive the snapshot with full precision") {
    RunConfig config;
    rng::Stream rs(3);
    for (int trial = 0; trial < 200; ++trial) {
        const double v = (rs.uniform() - 0.5) * std::pow(10.0, rs.uniform(-12.0, 12.0));
        config.solver.learning_rate = v;
        config.thermal.stefan_boltzmann = v * 1e-8;
        RunConfig parsed;
        parse_config_text(config_to_string(config), parsed);
        CHECK(parsed.solver.learning_rate == v);
        CHECK(parsed.thermal.stefan_boltzmann == v * 1e-8);
    }

    config.solver.learning_rate = 0.1 + 1e-17;
    RunConfig parsed;
    parse_config_text(config_to_string(config), parsed);
    CHECK(parsed.solver.learning_rate == config.solver.learning_rate);
}

TEST_CASE("format_double_exact keeps a numeric marker and handles infinities") {
    CHECK(format_double_exact(2.0) == "2.0");
    CHECK(format_double_exact(-3.0) == "-3.0");
    CHECK(format_double_exact(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double_exact(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double_exact(0.5).find('.') != std::string::npos);
}

TEST_CASE("partial configs override only the mentioned keys") {
    RunConfig config;
    parse_config_text("[solver]\niterations = 42\n", config);
    CHECK(config.solver.iterations == 42);
    CHECK(config.solver.learning_rate == 0.002);
    CHECK(config.scene_height == 128);

    parse_config_text("seed = 99\n\n[scene]\nkind = \"mondrian\"  # comment\n", config);
    CHECK(config.seed == 99);
    CHECK(config.scene_kind == "mondrian");
    CHECK(config.solver.iterations == 42);
}

TEST_CASE("unknown keys and malformed lines are rejected with a line number") {
    RunConfig config;
    try {
        parse_config_text("[solver]\nnot_a_key = 1\n", config);
        FAIL("expected invalid_input");
    } catch (const invalid_input& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("solver.not_a_key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("iterations = 5\n", config), invalid_input);
    CHECK_THROWS_AS(parse_config_text("[solver]\niterations = five\n", config),
                    invalid_input);
    CHECK_THROWS_AS(parse_config_text("[solver\niterations = 5\n", config), invalid_input);
    CHECK_THROWS_AS(parse_config_text("[scene]\nkind = mondrian\n", config), invalid_input);
    CHECK_THROWS_AS(parse_config_text("just some text\n", config), invalid_input);
}

TEST_CASE("strings with quotes and backslashes round-trip") {
    RunConfig config;
    config.out_dir = "dir with spaces/and\\backslash";
    config.visible_path = "quoted \"name\".pfm";
    RunConfig parsed;
    parse_config_text(config_to_string(config), parsed);
    CHECK(parsed.out_dir == config.out_dir);
    CHECK(parsed.visible_path == config.visible_path);
}

TEST_CASE("config files round-trip on disk") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "vti_config_test.toml").string();
    RunConfig config;
    config.seed = 123456789012345ULL;
    config.solver.weights.lambda_nonneg = 12.5;
    write_config_file(config, path);
    RunConfig parsed;
    parse_config_file(path, parsed);
    CHECK(parsed.seed == 123456789012345ULL);
    CHECK(parsed.solver.weights.lambda_nonneg == 12.5);
    CHECK(config_to_string(parsed) == config_to_string(config));
    std::filesystem::remove(path);

    CHECK_THROWS_AS(parse_config_file("/nonexistent/vti.toml", parsed), io_error);
}

TEST_CASE("the field registry drives flag names") {
    RunConfig config;
    const std::vector<ConfigField> fields = config_fields(config);
    bool saw_seed = false;
    bool saw_solver_iterations = false;
    for (const ConfigField& f : fields) {
        if (f.flag_name() == "--seed") saw_seed = true;
        if (f.flag_name() == "--solver.iterations") saw_solver_iterations = true;
    }
    CHECK(saw_seed);
    CHECK(saw_solver_iterations);
    CHECK(fields.size() >= 30);
}
