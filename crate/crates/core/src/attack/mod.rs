//! Inference attacks: feature-based classifiers and the image-fusion network.

mod classifier;
mod container;
mod fusion;
mod pipeline;
mod tree;

pub use classifier::{
    predict_topk, rank_classes, softmax_in_place, train_classifier, ClassifierHyper,
    ClassifierKind, ClassifierModel,
};
pub use container::{
    decode_container, encode_container, load_fusion_net, save_fusion_net, CONTAINER_VERSION, MAGIC,
};
pub use fusion::{
    build_fusion_net, cross_entropy, gradient_check, smoothed_entropy_floor, smoothed_target,
    gradient_check_report, train_fusion, FusionArch, FusionData, FusionHyper, FusionNet, GradientCheck,
    Layout, TrainReport,
    GRADIENT_SKIP,
};
pub use tree::{best_split, gini, split_impurity, DecisionTree, Node, RandomForest, TreeParams};
pub use pipeline::{
    attack_pipeline, attack_windows, build_windows, defend_dataset, defense_config_for, fit_and_rank,
    label_windows, window_features, window_image, AttackKind, AttackResult, Dataset, DefendedDataset,
    DefenseInputs, HomeView, MotifParams, NetShape, Samples, PipelineConfig, SegmentSpec, WindowSet, HOME_DEVICE,
    WINDOW_FEATURE_DIM,
};
