#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sanet/bench.hpp"
#include "sanet/image.hpp"
#include "sanet/model.hpp"
#include "sanet/rf.hpp"
#include "sanet/selftest.hpp"
#include "sanet/stf.hpp"
#include "sanet/tensor.hpp"
#include "sanet/threading.hpp"
#include "sanet/train.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSelftest = 3;

bool parse_size(const std::string& s, int& h, int& w) {
    const size_t sep = s.find_first_of("xX");
    if (sep == std::string::npos || sep == 0 || sep + 1 >= s.size()) return false;
    try {
        size_t used = 0;
        h = std::stoi(s.substr(0, sep), &used);
        if (used != sep) return false;
        const std::string rest = s.substr(sep + 1);
        w = std::stoi(rest, &used);
        if (used != rest.size()) return false;
    } catch (const std::exception&) {
        return false;
    }
    return h > 0 && w > 0;
}

const CLI::Validator SizeHxW(
    [](std::string& s) -> std::string {
        int h = 0, w = 0;
        return parse_size(s, h, w) ? std::string{} : "expected HxW with positive integers, got '" + s + "'";
    },
    "HxW");

int cmd_infer(const std::string& weights, const std::string& image, const std::string& out,
              const std::string& variant, int classes, const std::vector<double>& scales,
              const std::string& palette_path) {
    const sanet::ModelConfig cfg = sanet::make_config(variant[0], classes);
    const sanet::Model model = sanet::build(cfg, sanet::read_stf(weights));
    const sanet::Tensor4 img = sanet::read_image(image);
    const sanet::Tensor4 x = sanet::preprocess(img);
    const sanet::Tensor4 logits =
        scales.empty() ? sanet::forward(model, x) : sanet::multi_scale_infer(model, x, scales);
    const sanet::ClassMap pred = sanet::argmax_channels(logits);
    const sanet::Palette pal =
        palette_path.empty() ? sanet::default_palette(classes) : sanet::load_palette(palette_path);
    sanet::write_image(sanet::colorize(pred, pal), out);
    return 0;
}

int cmd_bench(const std::string& weights, const std::string& size, int iters, int warmup,
              const std::string& fold, const std::string& threads, const std::string& json_path) {
    int h = 0, w = 0;
    parse_size(size, h, w);
    sanet::set_threads(threads == "auto" ? 0 : 1);
    const sanet::WeightStore store = sanet::read_stf(weights);
    sanet::Model model = sanet::build(sanet::config_from_store(store), store);
    const bool fold_bn = fold == "on";
    if (fold_bn) sanet::fold_model(model);
    sanet::BenchReport report = sanet::run_bench(model, h, w, iters, warmup);
    report.fold_bn = fold_bn;
    std::cout << "engine: sanet cpu float32\n"
              << "hardware_threads: " << std::thread::hardware_concurrency() << "\n"
              << sanet::format_bench(report);
    if (!json_path.empty()) {
        std::ofstream f(json_path, std::ios::binary);
        if (!f) throw sanet::ValueError("cannot open " + json_path + " for writing");
        f << sanet::bench_json(report);
    }
    return 0;
}

int cmd_describe(const std::string& variant, const std::string& size, int classes) {
    int h = 0, w = 0;
    parse_size(size, h, w);
    const sanet::ModelConfig cfg = sanet::make_config(variant[0], classes);
    const sanet::WeightStore store = sanet::init_weights(cfg, 0);
    std::cout << sanet::format_report(sanet::describe(cfg, store, h, w));
    return 0;
}

int cmd_rf() {
    const sanet::ModelConfig cfg = sanet::make_config('s');
    const int probe = 512;
    struct Tap {
        const char* name;
        sanet::RfPoint point;
    };
    const Tap taps[] = {{"L3", sanet::RfPoint::L3}, {"DP2", sanet::RfPoint::Dp2}, {"L6", sanet::RfPoint::L6}};

    std::cout << "analytic receptive field (input pixels, h x w):\n";
    int analytic[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        const auto rf = sanet::receptive_field(sanet::model_rf_chain(cfg, taps[i].point));
        analytic[i] = rf.first;
        std::cout << "  " << std::left << std::setw(4) << taps[i].name << rf.first << " x " << rf.second << "\n";
    }
    const sanet::ModelSupport sup = sanet::impulse_support_all(cfg, probe, probe);
    const sanet::SupportBox boxes[] = {sup.l3, sup.dp2, sup.l6};
    std::cout << "impulse support on a " << probe << "x" << probe << " probe (h x w):\n";
    int impulse[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        impulse[i] = boxes[i].height();
        std::cout << "  " << std::left << std::setw(4) << taps[i].name << boxes[i].height() << " x "
                  << boxes[i].width() << "\n";
    }
    const bool ordered = analytic[0] < analytic[1] && analytic[1] < analytic[2] && impulse[0] < impulse[1] &&
                         impulse[1] < impulse[2];
    std::cout << "ordering RF(L3) < RF(DP2) < RF(L6): " << (ordered ? "ok" : "VIOLATED") << "\n";
    return ordered ? 0 : kExitSelftest;
}

int cmd_selftest() {
    const sanet::SelftestResult r = sanet::run_selftest();
    std::cout << sanet::format_selftest(r);
    return r.ok() ? 0 : kExitSelftest;
}

int cmd_gradcheck() {
    const int seeds = 20;
    const double tol = 1e-3;
    double worst = 0.0;
    for (int s = 1; s <= seeds; ++s) {
        const sanet::GradCheckReport rep = sanet::sad_gradient_check(static_cast<uint64_t>(s));
        worst = std::max(worst, rep.worst_rel);
        std::cout << "seed " << std::setw(2) << s << ": max rel err " << std::scientific
                  << std::setprecision(3) << rep.worst_rel << "\n";
    }
    std::cout << "worst over " << seeds << " seeds: " << std::scientific << std::setprecision(3) << worst
              << " (tol " << tol << ")\n";
    return worst <= tol ? 0 : kExitSelftest;
}

int cmd_export_random(uint64_t seed, const std::string& out, const std::string& variant, int classes) {
    const sanet::ModelConfig cfg = sanet::make_config(variant[0], classes);
    sanet::write_stf(sanet::init_weights(cfg, seed), out);
    return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& label_dir, int classes) {
    if (!fs::is_directory(pred_dir)) throw sanet::ValueError("not a directory: " + pred_dir);
    if (!fs::is_directory(label_dir)) throw sanet::ValueError("not a directory: " + label_dir);
    std::vector<fs::path> preds;
    for (const auto& entry : fs::directory_iterator(pred_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") preds.push_back(entry.path());
    std::sort(preds.begin(), preds.end());
    if (preds.empty()) throw sanet::ValueError("no .pgm predictions in " + pred_dir);

    sanet::MiouAccumulator acc(classes);
    for (const fs::path& p : preds) {
        const fs::path label = fs::path(label_dir) / p.filename();
        if (!fs::exists(label)) throw sanet::ValueError("no label pair for " + p.filename().string());
        acc.add(sanet::read_label_map(p.string()), sanet::read_label_map(label.string()));
    }
    const sanet::MiouResult res = acc.result();
    std::cout << "pairs: " << preds.size() << "\n";
    for (int c = 0; c < classes; ++c) {
        std::cout << "class " << std::setw(3) << c << ": ";
        if (res.present[c])
            std::cout << std::fixed << std::setprecision(4) << res.per_class[c] << "\n";
        else
            std::cout << "absent\n";
    }
    std::cout << "miou: " << std::fixed << std::setprecision(4) << res.mean << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SANet real-time semantic segmentation engine (CPU, float32)"};
    app.require_subcommand(1);
    const std::vector<std::string> variants = {"s", "m", "S", "M"};

    auto* infer = app.add_subcommand("infer", "segment one image and write a colorized map");
    std::string in_weights, in_image, in_out, in_variant = "s", in_palette;
    int in_classes = 19;
    std::vector<double> in_scales;
    infer->add_option("--weights", in_weights, "weight file (stf)")->required();
    infer->add_option("--image", in_image, "input image (P5/P6)")->required();
    infer->add_option("--out", in_out, "output image (P6)")->required();
    infer->add_option("--variant", in_variant, "model variant")->check(CLI::IsMember(variants));
    infer->add_option("--classes", in_classes, "class count")->check(CLI::Range(2, 1 << 16));
    infer->add_option("--scales", in_scales, "multi-scale factors, e.g. 0.5,0.75,1,1.25")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    infer->add_option("--palette", in_palette, "palette file (id R G B per line)");

    auto* bench = app.add_subcommand("bench", "measure single-image latency on synthetic input");
    std::string b_weights, b_size = "1024x2048", b_fold = "off", b_threads = "single", b_json;
    int b_iters = 30, b_warmup = 5;
    bench->add_option("--weights", b_weights, "weight file (stf)")->required();
    bench->add_option("--size", b_size, "input size HxW")->check(SizeHxW);
    bench->add_option("--iters", b_iters, "timed iterations")->check(CLI::Range(1, 1 << 20));
    bench->add_option("--warmup", b_warmup, "untimed warmup iterations")->check(CLI::Range(0, 1 << 20));
    bench->add_option("--fold-bn", b_fold, "fold batch norm into convolutions")
        ->check(CLI::IsMember({"on", "off"}));
    bench->add_option("--threads", b_threads, "kernel threading")->check(CLI::IsMember({"single", "auto"}));
    bench->add_option("--json", b_json, "also write the report as JSON");

    auto* describe = app.add_subcommand("describe", "print the stage table: shapes, params, receptive field");
    std::string d_variant, d_size = "1024x2048";
    int d_classes = 19;
    describe->add_option("--variant", d_variant, "model variant")->required()->check(CLI::IsMember(variants));
    describe->add_option("--size", d_size, "input size HxW")->check(SizeHxW);
    describe->add_option("--classes", d_classes, "class count")->check(CLI::Range(2, 1 << 16));

    auto* rf = app.add_subcommand("rf", "report analytic and measured receptive fields");
    auto* selftest = app.add_subcommand("selftest", "run the randomized kernel verification suites");
    auto* gradcheck = app.add_subcommand("gradcheck", "check decoder gradients against finite differences");

    auto* exportr = app.add_subcommand("export-random", "write a deterministic random-weight file");
    std::string e_out, e_variant = "s";
    uint64_t e_seed = 0;
    int e_classes = 19;
    exportr->add_option("--seed", e_seed, "init seed")->required();
    exportr->add_option("--out", e_out, "output weight file (stf)")->required();
    exportr->add_option("--variant", e_variant, "model variant")->check(CLI::IsMember(variants));
    exportr->add_option("--classes", e_classes, "class count")->check(CLI::Range(2, 1 << 16));

    auto* eval = app.add_subcommand("eval", "mean IoU of predicted label maps against references");
    std::string v_pred, v_label;
    int v_classes = 0;
    eval->add_option("--pred-dir", v_pred, "directory of predicted .pgm maps")->required();
    eval->add_option("--label-dir", v_label, "directory of reference .pgm maps")->required();
    eval->add_option("--classes", v_classes, "class count")->required()->check(CLI::Range(2, 1 << 16));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (infer->parsed()) return cmd_infer(in_weights, in_image, in_out, in_variant, in_classes, in_scales, in_palette);
        if (bench->parsed()) return cmd_bench(b_weights, b_size, b_iters, b_warmup, b_fold, b_threads, b_json);
        if (describe->parsed()) return cmd_describe(d_variant, d_size, d_classes);
        if (rf->parsed()) return cmd_rf();
        if (selftest->parsed()) return cmd_selftest();
        if (gradcheck->parsed()) return cmd_gradcheck();
        if (exportr->parsed()) return cmd_export_random(e_seed, e_out, e_variant, e_classes);
        if (eval->parsed()) return cmd_eval(v_pred, v_label, v_classes);
    } catch (const sanet::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
