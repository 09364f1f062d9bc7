#include "glyphformer/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "glyphformer/error.hpp"
#include "glyphformer/parallel.hpp"

namespace glyphformer {

namespace {

std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Modulo draw rather than std::uniform_int_distribution, whose output is
// implementation-defined.
template <typename V>
void shuffle(std::vector<V>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

std::size_t fraction_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

bool all_finite(const ModelParams<float>& p) {
    auto& mp = const_cast<ModelParams<float>&>(p);
    for (auto& r : mp.refs())
        if (!r.value->allFinite()) return false;
    return true;
}

}  // namespace

Preset preset_by_name(const std::string& name) {
    if (name == "paper") return {"paper", 512, 1024, 0};
    if (name == "desk") return {"desk", 64, 256, 500};
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + name + "' (expected paper or desk)");
}

void Manifest::apply_preset(const std::string& name) {
    const Preset p = preset_by_name(name);
    preset = p.name;
    training.epochs = p.epochs;
    training.batch_size = p.batch_size;
    glyph_cap = p.glyph_cap;
}

Manifest Manifest::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    Manifest m;
    try {
        m.apply_preset(j.value("preset", std::string("desk")));
        for (const auto& e : j.at("fonts")) {
            ManifestEntry entry;
            std::filesystem::path p = e.at("path").get<std::string>();
            entry.font = p.is_absolute() ? p : base_dir / p;
            entry.label = e.at("label").get<std::string>();
            entry.weight = e.value("weight", std::string());
            m.entries.push_back(std::move(entry));
        }
        const std::string task = j.value("task", std::string("style"));
        if (task == "style")
            m.task = Task::Style;
        else if (task == "weight")
            m.task = Task::Weight;
        else
            throw Error(ErrorKind::InvalidArgument, "unknown task '" + task + "'");
        m.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("split")) {
            const auto f = j.at("split").get<std::vector<double>>();
            if (f.size() != 3) throw Error(ErrorKind::InvalidArgument, "split needs three fractions");
            m.split = {f[0], f[1], f[2]};
        }
        if (j.contains("representation"))
            m.representation = parse_representation(j.at("representation").get<std::string>());
        m.training.epochs = j.value("epochs", m.training.epochs);
        m.training.batch_size = j.value("batch_size", m.training.batch_size);
        m.glyph_cap = j.value("glyph_cap", m.glyph_cap);
        m.bins = j.value("bins", m.bins);
        if (j.contains("encoder")) {
            const auto& e = j.at("encoder");
            m.encoder.d_model = e.value("d_model", m.encoder.d_model);
            m.encoder.heads = e.value("heads", m.encoder.heads);
            m.encoder.layers = e.value("layers", m.encoder.layers);
            m.encoder.ffn_dim = e.value("ffn_dim", m.encoder.ffn_dim);
            m.encoder.dropout = e.value("dropout", m.encoder.dropout);
        }
        if (j.contains("optimizer")) {
            nlohmann::json o = to_json(m.training.optimizer);
            o.update(j.at("optimizer"));
            m.training.optimizer = adamw_config_from_json(o);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("bad manifest: ") + e.what());
    }
    m.check();
    return m;
}

Manifest Manifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, "manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j, path.parent_path());
}

void Manifest::check() const {
    if (entries.empty()) throw Error(ErrorKind::InvalidArgument, "manifest lists no fonts");
    if (task == Task::Weight)
        for (const auto& e : entries)
            if (e.weight.empty())
                throw Error(ErrorKind::InvalidArgument, "weight task needs a weight tag for " + e.font.string());
    if (class_labels().size() < 2) throw Error(ErrorKind::InvalidArgument, "manifest needs at least two labels");
    for (double f : split)
        if (!(f >= 0.0)) throw Error(ErrorKind::InvalidArgument, "split fractions must be non-negative");
    if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9)
        throw Error(ErrorKind::InvalidArgument, "split fractions must sum to 1");
    if (training.epochs < 0) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 0");
    if (training.batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
    if (bins < 2) throw Error(ErrorKind::InvalidArgument, "bins must be >= 2");
}

std::string Manifest::class_of(const ManifestEntry& entry) const {
    return task == Task::Weight ? entry.label + "-" + entry.weight : entry.label;
}

std::vector<std::string> Manifest::class_labels() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        const std::string c = class_of(e);
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    return out;
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw Error(ErrorKind::InvalidArgument, "unknown split '" + std::string(name) + "'");
}

SplitPlan plan_splits(const Manifest& manifest) {
    manifest.check();
    SplitPlan plan;
    plan.labels = manifest.class_labels();
    const std::size_t n_fonts = manifest.entries.size();
    plan.fonts.resize(n_fonts);
    plan.stats.resize(n_fonts);
    std::vector<std::vector<GlyphSample>> usable(n_fonts);

    parallel_for(n_fonts, [&](std::size_t i) {
        const auto& entry = manifest.entries[i];
        std::shared_ptr<const FontFile> font;
        try {
            font = std::make_shared<const FontFile>(FontFile::load(entry.font));
        } catch (const Error& e) {
            throw Error(ErrorKind::FontLoadError, entry.font.string() + ": " + e.what());
        }
        const auto label_it = std::find(plan.labels.begin(), plan.labels.end(), manifest.class_of(entry));
        const int label = static_cast<int>(label_it - plan.labels.begin());
        const QuantizerConfig q = QuantizerConfig::for_font(*font, manifest.bins);

        FontStats& st = plan.stats[i];
        st.path = entry.font.string();
        std::set<std::uint32_t> seen;
        std::vector<char32_t> cps;
        try {
            cps = font->list_codepoints();
        } catch (const Error& e) {
            throw Error(ErrorKind::FontLoadError, entry.font.string() + ": " + e.what());
        }
        std::sort(cps.begin(), cps.end());
        st.codepoints = cps.size();
        for (char32_t cp : cps) {
            const std::uint32_t gid = *font->char_to_glyph(cp);
            if (!seen.insert(gid).second) {
                ++st.skipped_duplicate;
                continue;
            }
            try {
                const GlyphOutline outline = font->glyph_outline(gid);
                if (outline.empty()) {
                    ++st.skipped_empty;
                    continue;
                }
                for (Representation r : kAllRepresentations) (void)encode_glyph(outline, r, q);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::SequenceTooLong)
                    ++st.skipped_too_long;
                else
                    ++st.skipped_invalid;
                continue;
            }
            usable[i].push_back({static_cast<int>(i), cp, gid, label});
        }
        st.usable = usable[i].size();
        plan.fonts[i] = std::move(font);
    });

    std::vector<std::size_t> per_class(plan.labels.size(), 0);
    for (std::size_t i = 0; i < n_fonts; ++i) {
        plan.font_paths.push_back(plan.stats[i].path);
        auto& glyphs = usable[i];
        std::mt19937_64 rng(mix(manifest.seed ^ mix(i + 1)));
        shuffle(glyphs, rng);
        if (manifest.glyph_cap > 0 && glyphs.size() > manifest.glyph_cap) glyphs.resize(manifest.glyph_cap);
        const std::size_t n = glyphs.size();
        const std::size_t n_train = fraction_count(manifest.split[0], n);
        const std::size_t n_val = std::min(n - n_train, fraction_count(manifest.split[1], n));
        plan.train.insert(plan.train.end(), glyphs.begin(), glyphs.begin() + n_train);
        plan.val.insert(plan.val.end(), glyphs.begin() + n_train, glyphs.begin() + n_train + n_val);
        plan.test.insert(plan.test.end(), glyphs.begin() + n_train + n_val, glyphs.end());
        plan.stats[i].selected = n;
        if (!glyphs.empty()) per_class[glyphs.front().label] += n;
    }
    for (std::size_t c = 0; c < per_class.size(); ++c)
        if (per_class[c] == 0) throw Error(ErrorKind::EmptyClass, "label '" + plan.labels[c] + "' has no usable glyphs");
    return plan;
}

const std::vector<TokenSequence>& Dataset::split(Split s) const {
    return s == Split::Train ? train : s == Split::Val ? val : test;
}

const std::vector<GlyphSample>& Dataset::samples(Split s) const {
    return s == Split::Train ? train_samples : s == Split::Val ? val_samples : test_samples;
}

Dataset encode_dataset(const SplitPlan& plan, Representation representation, int bins) {
    Dataset d;
    d.representation = representation;
    d.mode = token_mode_for(representation);
    d.labels = plan.labels;
    d.train_samples = plan.train;
    d.val_samples = plan.val;
    d.test_samples = plan.test;
    std::vector<QuantizerConfig> quant;
    for (const auto& f : plan.fonts) quant.push_back(QuantizerConfig::for_font(*f, bins));

    auto encode = [&](const std::vector<GlyphSample>& samples, std::vector<TokenSequence>& out) {
        out.resize(samples.size());
        parallel_for(samples.size(), [&](std::size_t k) {
            const GlyphSample& s = samples[k];
            const auto& font = *plan.fonts[s.font_index];
            out[k] = encode_glyph(font.glyph_outline(s.glyph_id), representation, quant[s.font_index]);
            out[k].label = s.label;
        });
    };
    encode(d.train_samples, d.train);
    encode(d.val_samples, d.val);
    encode(d.test_samples, d.test);
    return d;
}

Dataset build_dataset(const Manifest& manifest) {
    return encode_dataset(plan_splits(manifest), manifest.representation, manifest.bins);
}

EncoderConfig encoder_for(const Manifest& manifest, const Dataset& data) {
    EncoderConfig cfg = manifest.encoder;
    cfg.mode = data.mode;
    cfg.num_classes = static_cast<int>(data.labels.size());
    cfg.bins = manifest.bins;
    cfg.seed = manifest.seed;
    cfg.check();
    return cfg;
}

Predictions predict(const ModelParams<float>& params, const EncoderConfig& encoder,
                    const std::vector<TokenSequence>& seqs, int batch_size) {
    Predictions out;
    const std::size_t n = seqs.size();
    out.predicted.assign(n, 0);
    out.truth.assign(n, 0);
    out.losses.assign(n, 0.0);
    const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
    const std::size_t n_batches = (n + bs - 1) / bs;
    parallel_for(n_batches, [&](std::size_t b) {
        const std::size_t lo = b * bs, hi = std::min(n, lo + bs);
        std::vector<const TokenSequence*> ptrs;
        for (std::size_t i = lo; i < hi; ++i) ptrs.push_back(&seqs[i]);
        const auto batch = assemble_batch<float>(std::span<const TokenSequence* const>(ptrs), params.embeddings);
        const Matrix<float> logits = forward<float>(batch, params, encoder, false);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto row = logits.row(static_cast<Eigen::Index>(i - lo)).cast<double>();
            Eigen::Index arg = 0;
            const double mx = row.maxCoeff(&arg);
            const double lse = mx + std::log((row.array() - mx).exp().sum());
            out.predicted[i] = static_cast<int>(arg);
            out.truth[i] = seqs[i].label;
            out.losses[i] = lse - row(seqs[i].label);
        }
    });
    return out;
}

MetricsReport evaluate(const ModelParams<float>& params, const EncoderConfig& encoder,
                       const std::vector<TokenSequence>& seqs, int batch_size) {
    const Predictions p = predict(params, encoder, seqs, batch_size);
    double sum = 0.0;
    for (double l : p.losses) sum += l;
    const double loss = p.losses.empty() ? 0.0 : sum / static_cast<double>(p.losses.size());
    return compute_metrics(p.predicted, p.truth, encoder.num_classes, loss);
}

MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& data, Split split, int batch_size) {
    if (ckpt.representation != data.representation)
        throw Error(ErrorKind::ConfigMismatch, "checkpoint was trained on '" +
                                                   std::string(to_string(ckpt.representation)) + "' but dataset is '" +
                                                   std::string(to_string(data.representation)) + "'");
    if (ckpt.encoder.mode != data.mode) throw Error(ErrorKind::ConfigMismatch, "checkpoint token mode differs");
    if (ckpt.labels != data.labels) throw Error(ErrorKind::ConfigMismatch, "checkpoint label space differs");
    return evaluate(ckpt.params, ckpt.encoder, data.split(split), batch_size);
}

TrainResult train(const Dataset& data, const EncoderConfig& encoder, const TrainingConfig& training,
                  std::uint64_t seed, const EpochCallback& on_epoch) {
    if (data.train.empty()) throw Error(ErrorKind::InvalidArgument, "training split is empty");
    if (training.batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
    encoder.check();
    if (encoder.mode != data.mode) throw Error(ErrorKind::ConfigMismatch, "encoder mode differs from dataset");
    if (encoder.num_classes != static_cast<int>(data.labels.size()))
        throw Error(ErrorKind::ConfigMismatch, "encoder class count differs from dataset");

    Checkpoint current;
    current.encoder = encoder;
    current.optimizer = training.optimizer;
    current.representation = data.representation;
    current.labels = data.labels;
    current.params = ModelParams<float>::initialize(encoder);
    current.state = OptimizerState<float>::create(encoder, training.optimizer);

    TrainResult result;
    result.best = current;
    double best_val = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(mix(seed ^ 0x5eedULL));
    std::vector<std::size_t> order(data.train.size());
    const std::size_t bs = static_cast<std::size_t>(training.batch_size);
    Checkpoint last_good = current;

    for (int epoch = 1; epoch <= training.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, rng);
        double loss_sum = 0.0;
        try {
            for (std::size_t lo = 0; lo < order.size(); lo += bs) {
                const std::size_t hi = std::min(order.size(), lo + bs);
                std::vector<const TokenSequence*> ptrs;
                for (std::size_t k = lo; k < hi; ++k) ptrs.push_back(&data.train[order[k]]);
                const std::uint64_t dropout_seed = mix(seed ^ mix(static_cast<std::uint64_t>(current.state.step) + 1));
                auto lg = loss_and_grads<float>(std::span<const TokenSequence* const>(ptrs), current.params, encoder,
                                                dropout_seed);
                if (!std::isfinite(lg.loss))
                    throw Error(ErrorKind::NonFiniteActivation,
                                "loss became non-finite at step " + std::to_string(current.state.step + 1));
                loss_sum += static_cast<double>(lg.loss) * static_cast<double>(hi - lo);
                adamw_step(current.params, lg.grads, current.state);
            }
            if (!all_finite(current.params))
                throw Error(ErrorKind::NonFiniteActivation, "parameters became non-finite in epoch " + std::to_string(epoch));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NonFiniteActivation) throw;
            throw DivergenceError(std::string("training diverged: ") + e.what(), std::move(last_good));
        }
        current.epoch = epoch;

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr_at(current.state.step, training.optimizer);
        log.train_loss = loss_sum / static_cast<double>(order.size());
        log.val_loss = data.val.empty() ? 0.0 : evaluate(current.params, encoder, data.val).loss;
        const double sel = data.val.empty() ? log.train_loss : log.val_loss;
        if (!std::isfinite(sel))
            throw DivergenceError("validation loss became non-finite in epoch " + std::to_string(epoch),
                                  std::move(last_good));
        if (sel < best_val) {
            best_val = sel;
            result.best = current;
            result.best_epoch = epoch;
        }
        result.log.push_back(log);
        last_good = current;
        if (on_epoch) on_epoch(log);
    }
    result.final = std::move(current);
    return result;
}

std::string display_name(Representation r) {
    switch (r) {
        case Representation::OriginalTT: return "Original TrueType";
        case Representation::DecomposedTT: return "Decomposed TrueType";
        case Representation::SegmentedTT: return "Segmented TrueType";
        case Representation::PostScript: return "PostScript";
    }
    return "?";
}

Comparison compare_formats(const Manifest& manifest, const FormatEpochCallback& on_epoch) {
    const SplitPlan plan = plan_splits(manifest);
    Comparison cmp;
    cmp.labels = plan.labels;
    cmp.stats = plan.stats;
    std::vector<std::size_t> counts(plan.labels.size(), 0);
    for (const auto& s : plan.test) ++counts[s.label];
    if (!plan.test.empty())
        cmp.majority_baseline = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                                static_cast<double>(plan.test.size());

    for (Representation r : kAllRepresentations) {
        const Dataset data = encode_dataset(plan, r, manifest.bins);
        const EncoderConfig enc = encoder_for(manifest, data);
        EpochCallback cb;
        if (on_epoch) cb = [&](const EpochLog& l) { on_epoch(r, l); };
        TrainResult tr = train(data, enc, manifest.training, manifest.seed, cb);
        FormatResult row;
        row.representation = r;
        row.best = evaluate(tr.best, data, Split::Test);
        row.final = evaluate(tr.final, data, Split::Test);
        row.best_epoch = tr.best_epoch;
        row.log = std::move(tr.log);
        for (const auto& s : data.test_samples) row.test_codepoints.push_back(s.codepoint);
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

}  // namespace glyphformer
