// Writes a synthetic content/style pair for trying out the patchstyle tool.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "patchstyle/demo_images.hpp"
#include "patchstyle/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate demo inputs for patchstyle"};
    std::string dir = "demo";
    int size = 400;
    std::uint64_t seed = 7;
    app.add_option("--dir", dir, "Output directory");
    app.add_option("--size", size, "Image side length")->check(CLI::Range(64, 4096));
    app.add_option("--seed", seed, "Stroke seed for the style image");
    CLI11_PARSE(app, argc, argv);
    try {
        std::filesystem::create_directories(dir);
        const std::filesystem::path d(dir);
        patchstyle::save_png(d / "content.png", patchstyle::demo::content_image(size, size));
        patchstyle::save_png(d / "style.png", patchstyle::demo::style_image(size, size, seed));
        std::cout << "wrote " << (d / "content.png").string() << " and " << (d / "style.png").string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 3;
    }
    return 0;
}
