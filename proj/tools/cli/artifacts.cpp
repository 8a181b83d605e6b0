#include "artifacts.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "geofuse/audit.hpp"

namespace geofuse::cli {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string hyperparams_text(const HyperParams& hp) {
    std::ostringstream out;
    out << "learning_rate = " << format_number(hp.learning_rate) << '\n'
        << "num_filters = " << hp.num_filters << '\n'
        << "kernel_size = " << hp.kernel_size << '\n'
        << "batch_size = " << hp.batch_size << '\n'
        << "dropout_rate = " << format_number(hp.dropout_rate) << '\n'
        << "epochs = " << hp.epochs << '\n'
        << "regularization = " << to_string(hp.regularization) << '\n'
        << "optimizer = " << to_string(hp.optimizer) << '\n';
    return out.str();
}

HyperParams parse_hyperparams(const std::string& text) {
    ExperimentConfig scratch;
    for (const auto& [key, value] : parse_config_text(text, "hyperparameters")) {
        apply_setting(scratch, "baseline." + key, value);
    }
    scratch.baseline.validate();
    return scratch.baseline;
}

namespace {

void put_tensor(std::ostringstream& out, const Tensor& t) {
    out << "tensor " << t.rank();
    for (std::size_t d : t.shape()) out << ' ' << d;
    out << '\n';
    bool first = true;
    for (double v : t.values()) {
        out << (first ? "" : " ") << format_number(v);
        first = false;
    }
    out << '\n';
}

void get_tensor(std::istringstream& in, Tensor& into) {
    std::string tag;
    std::size_t rank = 0;
    if (!(in >> tag >> rank) || tag != "tensor") throw std::runtime_error("model file: expected tensor");
    Shape shape(rank);
    for (auto& d : shape) in >> d;
    if (!in || shape != into.shape()) {
        throw std::runtime_error("model file: tensor shape " + shape_string(shape) + " does not match " +
                                 shape_string(into.shape()));
    }
    std::string token;
    for (double& v : into.values()) {
        in >> token;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc()) throw std::runtime_error("model file: bad number '" + token + "'");
    }
    if (!in) throw std::runtime_error("model file: truncated tensor");
}

}  // namespace

std::string cnn_text(const CnnClassifier& model) {
    std::ostringstream out;
    out << "cnn " << model.arch.in_channels << ' ' << model.arch.patch_size << ' ' << model.arch.num_classes << ' '
        << model.conv.out_channels() << ' ' << model.conv.weights.dim(2) << '\n';
    for (const Tensor* t : model.parameters()) put_tensor(out, *t);
    return out.str();
}

CnnClassifier parse_cnn(const std::string& text) {
    std::istringstream in(text);
    std::string tag;
    CnnArch arch;
    HyperParams hp;
    if (!(in >> tag >> arch.in_channels >> arch.patch_size >> arch.num_classes >> hp.num_filters >> hp.kernel_size) ||
        tag != "cnn") {
        throw std::runtime_error("model file: missing cnn header");
    }
    Rng rng(0);
    CnnClassifier model = CnnClassifier::init(arch, hp, rng);
    for (Tensor* t : model.parameters()) get_tensor(in, *t);
    return model;
}

std::string forecaster_text(const LstmForecaster& model) {
    std::ostringstream out;
    out << "lstm " << model.lstm.hidden_size() << '\n';
    for (const Tensor* t : model.parameters()) put_tensor(out, *t);
    return out.str();
}

LstmForecaster parse_forecaster(const std::string& text) {
    std::istringstream in(text);
    std::string tag;
    LstmArch arch;
    if (!(in >> tag >> arch.hidden) || tag != "lstm") throw std::runtime_error("model file: missing lstm header");
    Rng rng(0);
    LstmForecaster model = LstmForecaster::init(arch, rng);
    for (Tensor* t : model.parameters()) get_tensor(in, *t);
    return model;
}

std::string learning_curve_csv(const TrainReport& report) {
    std::string out = "epoch,train_loss,validation_loss\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
        out += std::to_string(e + 1) + ',' + format_number(report.train_loss[e]) + ',' +
               format_number(report.validation_loss[e]) + '\n';
    }
    return out;
}

std::string record_text(const Record& record) {
    std::string out;
    for (const auto& [k, v] : record) out += k + " = " + format_number(v) + '\n';
    return out;
}

Record parse_record(const std::string& text) {
    Record out;
    for (const auto& [k, v] : parse_config_text(text, "record")) {
        double d = 0.0;
        if (v == "nan") {
            d = std::numeric_limits<double>::quiet_NaN();
        } else if (v == "inf" || v == "-inf") {
            d = v == "inf" ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        } else {
            const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
            if (res.ec != std::errc()) throw std::runtime_error("record: bad number for " + k);
        }
        out[k] = d;
    }
    return out;
}

Record training_record(const TrainReport& cnn, std::size_t parameter_count, const TrainReport& forecaster) {
    Record r;
    r["epochs"] = static_cast<double>(cnn.train_loss.size());
    r["convergence_epoch"] = static_cast<double>(cnn.convergence_epoch);
    r["work_gmac"] = static_cast<double>(cnn.work_macs) * 1e-9;
    r["final_train_loss"] = cnn.train_loss.back();
    r["final_validation_loss"] = cnn.validation_loss.back();
    r["train_accuracy"] = cnn.train_accuracy.value_or(0.0);
    r["validation_accuracy"] = cnn.validation_accuracy.value_or(0.0);
    r["test_accuracy"] = cnn.test_accuracy.value_or(0.0);
    r["parameter_count"] = static_cast<double>(parameter_count);
    r["forecaster_final_validation_loss"] = forecaster.validation_loss.back();
    r["forecaster_convergence_epoch"] = static_cast<double>(forecaster.convergence_epoch);
    return r;
}

Record evaluation_record(const RunEvaluation& ev, std::size_t classes) {
    Record r;
    r["accuracy"] = ev.test.accuracy;
    r["precision"] = ev.test.precision;
    r["recall"] = ev.test.recall;
    r["f1"] = ev.test.f1;
    r["specificity"] = ev.test.specificity;
    r["auc"] = ev.test.auc;
    for (std::size_t c = 0; c < classes; ++c) r["class_accuracy." + std::to_string(c)] = ev.test.per_class_accuracy[c];
    r["train_accuracy"] = ev.train_accuracy;
    r["validation_accuracy"] = ev.validation_accuracy;
    r["mean_iou"] = ev.mean_iou;
    r["boundary_accuracy"] = ev.boundary_accuracy;
    r["boundary_gradient_norm"] = ev.boundary_gradient_norm;
    r["mixed_pixels"] = ev.mixed_pixels;
    r["pixel_agreement"] = ev.pixel_agreement;
    r["temporal_accuracy"] = ev.temporal.temporal_accuracy;
    r["temporal_iou"] = ev.temporal.temporal_iou;
    r["prediction_error"] = ev.forecast_error;
    for (const auto& [t, v] : ev.change_sensitivity) {
        r["change_sensitivity." + std::to_string(static_cast<std::size_t>(t))] = v;
    }
    return r;
}

}  // namespace geofuse::cli
