//! Published marginal-effect and elasticity matrices, transcribed cell by
//! cell. Rows are the affected quantity, columns the price, in the order of
//! the standard industry spec with materials and services last. Marginal
//! effects are in quantity convention at farm level.

pub(super) struct RawTable {
    pub n: usize,
    pub effect: &'static [f64],
    pub se: &'static [f64],
    pub p: &'static [f64],
}

pub(super) const DAIRY_EFFECTS: RawTable = RawTable {
    n: 6,
    effect: &[
        -211732.0, 525.0, -30.0, -648556.0, -529.0, 692563.0, 525.0, 0.0, 0.0, -173.0, 0.0, -130.0, 30.0, 0.0, 0.0,
        -83.0, 0.0, -110.0, 648556.0, 173.0, -83.0, -428940.0, 179.0, -86324.0, 529.0, 0.0, 0.0, 179.0, -1.0, 59.0,
        692563.0, -130.0, -110.0, -86324.0, 59.0, -64251.0,
    ],
    se: &[
        1278000.0, 229.0, 96.0, 354317.0, 269.0, 400063.0, 229.0, 0.0, 0.0, 69.0, 0.0, 92.0, 96.0, 0.0, 0.0, 29.0, 0.0,
        46.0, 354317.0, 69.0, 29.0, 132524.0, 83.0, 106260.0, 269.0, 0.0, 0.0, 83.0, 0.0, 85.0, 400063.0, 92.0, 46.0,
        106260.0, 85.0, 182511.0,
    ],
    p: &[
        0.87, 0.02, 0.76, 0.07, 0.05, 0.08, 0.02, 0.4, 0.28, 0.01, 0.23, 0.16, 0.76, 0.28, 0.32, 0.0, 0.34, 0.02, 0.07,
        0.01, 0.0, 0.0, 0.03, 0.42, 0.05, 0.23, 0.34, 0.03, 0.0, 0.49, 0.08, 0.16, 0.02, 0.42, 0.49, 0.73,
    ],
};

pub(super) const RICE_EFFECTS: RawTable = RawTable {
    n: 6,
    effect: &[
        -0.33, 0.07, -0.99, -0.1, -1.83, 1245.0, 0.07, -0.3, -1.22, -0.06, -1.97, 1348.0, -0.99, -1.22, 1.02, 0.1,
        2.69, -171.0, 0.1, 0.06, -0.1, 0.04, -0.09, 69.3, 1.83, 1.97, -2.69, -0.09, -6.59, -1190.0, 1245.0, 1348.0,
        -171.0, 69.3, 1190.0, -1108000.0,
    ],
    se: &[
        0.26, 0.21, 0.32, 0.03, 0.36, 198.9, 0.21, 0.33, 0.28, 0.03, 0.38, 214.2, 0.32, 0.28, 0.95, 0.13, 0.54, 432.1,
        0.03, 0.03, 0.13, 0.08, 0.05, 76.69, 0.36, 0.38, 0.54, 0.05, 0.73, 300.9, 198.9, 214.2, 432.1, 76.69, 300.9,
        268705.0,
    ],
    p: &[
        0.2, 0.73, 0.0, 0.0, 0.0, 0.0, 0.73, 0.37, 0.0, 0.02, 0.0, 0.0, 0.0, 0.0, 0.28, 0.45, 0.0, 0.69, 0.0, 0.02,
        0.45, 0.64, 0.05, 0.37, 0.0, 0.0, 0.0, 0.05, 0.0, 0.0, 0.0, 0.0, 0.69, 0.37, 0.0, 0.0,
    ],
};

pub(super) const NONRICE_EFFECTS: RawTable = RawTable {
    n: 5,
    effect: &[
        -0.21, -0.16, 0.0, -1.15, 427.7, -0.16, 1.66, 0.02, 0.85, -849.5, 0.0, -0.02, 0.0, -0.03, -9.68, 1.15, -0.85,
        -0.03, -3.59, -738.5, 427.7, -849.5, -9.68, -738.5, 358765.0,
    ],
    se: &[
        0.24, 0.18, 0.01, 0.24, 126.7, 0.18, 0.93, 0.06, 0.38, 419.5, 0.01, 0.06, 0.03, 0.02, 38.32, 0.24, 0.38, 0.02,
        0.52, 204.3, 126.7, 419.5, 38.32, 204.3, 205608.0,
    ],
    p: &[
        0.39, 0.36, 0.71, 0.0, 0.0, 0.36, 0.08, 0.78, 0.03, 0.04, 0.71, 0.78, 0.96, 0.24, 0.8, 0.0, 0.03, 0.24, 0.0,
        0.0, 0.0, 0.04, 0.8, 0.0, 0.08,
    ],
};

pub(super) const HORT_EFFECTS: RawTable = RawTable {
    n: 10,
    effect: &[
        -0.02, 0.02, 0.01, 0.0, -0.02, -0.01, 0.0, 0.03, 0.02, -24.45, 0.02, 0.17, -0.02, -0.01, -0.05, 0.0, 0.0, 0.06,
        -0.01, -83.76, 0.01, -0.02, -0.01, 0.0, 0.01, 0.0, 0.0, 0.0, -0.02, 21.06, 0.0, -0.01, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 9.36, -0.02, -0.05, 0.01, 0.0, -0.02, -0.01, 0.0, -0.03, 0.03, 66.27, -0.01, 0.0, 0.0, 0.0, -0.01,
        0.01, 0.0, -0.02, 0.0, 9.39, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.81, -0.03, -0.06, 0.0, 0.0, 0.03,
        0.02, 0.0, 0.03, 0.07, -85.9, -0.02, 0.01, 0.02, 0.0, -0.03, 0.0, 0.0, 0.07, 0.0, -132.6, 24.45, 83.76, -21.06,
        -9.36, -66.27, -9.39, -5.81, -85.9, -132.6, 264384.0,
    ],
    se: &[
        0.01, 0.03, 0.01, 0.0, 0.01, 0.0, 0.0, 0.02, 0.01, 32.92, 0.03, 0.19, 0.02, 0.0, 0.05, 0.01, 0.01, 0.02, 0.02,
        43.87, 0.01, 0.02, 0.01, 0.0, 0.01, 0.0, 0.0, 0.01, 0.01, 22.55, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        6.59, 0.01, 0.05, 0.01, 0.0, 0.02, 0.0, 0.0, 0.02, 0.01, 27.39, 0.0, 0.01, 0.0, 0.0, 0.0, 0.01, 0.0, 0.01, 0.0,
        16.81, 0.0, 0.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 8.77, 0.02, 0.02, 0.01, 0.0, 0.02, 0.01, 0.0, 0.08, 0.02,
        125.1, 0.01, 0.02, 0.01, 0.0, 0.01, 0.0, 0.0, 0.02, 0.02, 39.5, 32.92, 43.87, 22.55, 6.59, 27.39, 16.81, 8.77,
        125.1, 39.5, 220441.0,
    ],
    p: &[
        0.16, 0.47, 0.32, 0.11, 0.03, 0.0, 0.76, 0.16, 0.09, 0.46, 0.47, 0.36, 0.33, 0.2, 0.25, 0.8, 0.84, 0.01, 0.78,
        0.06, 0.32, 0.33, 0.12, 0.45, 0.12, 0.3, 0.31, 0.95, 0.03, 0.35, 0.11, 0.2, 0.45, 0.69, 0.53, 0.63, 0.11, 0.39,
        0.54, 0.16, 0.03, 0.25, 0.12, 0.53, 0.29, 0.0, 0.67, 0.11, 0.02, 0.02, 0.0, 0.8, 0.3, 0.63, 0.0, 0.01, 0.66,
        0.08, 0.84, 0.58, 0.76, 0.84, 0.31, 0.11, 0.67, 0.66, 0.67, 0.31, 0.76, 0.51, 0.16, 0.01, 0.95, 0.39, 0.11,
        0.08, 0.31, 0.75, 0.0, 0.49, 0.09, 0.78, 0.03, 0.54, 0.02, 0.84, 0.76, 0.0, 0.93, 0.0, 0.46, 0.06, 0.35, 0.16,
        0.02, 0.58, 0.51, 0.49, 0.0, 0.23,
    ],
};

pub(super) const DAIRY_ELASTICITIES: RawTable = RawTable {
    n: 6,
    effect: &[
        -0.08, 0.16, -0.04, -0.49, -0.07, 0.55, 1.36, -0.17, 0.28, -0.87, 0.06, -0.68, 0.34, -0.33, -0.71, -1.89,
        -0.05, 2.65, 2.06, 0.44, -0.81, -2.62, 0.16, 0.59, 0.71, -0.06, -0.08, 0.47, -0.49, -0.32, -1.11, 0.17, 0.56,
        0.28, -0.03, 0.0,
    ],
    se: &[
        0.52, 0.07, 0.12, 0.28, 0.04, 0.34, 0.6, 0.21, 0.26, 0.34, 0.05, 0.5, 1.11, 0.31, 0.72, 0.67, 0.06, 1.13, 1.16,
        0.18, 0.29, 0.83, 0.08, 0.74, 0.36, 0.05, 0.08, 0.21, 0.05, 0.25, 0.67, 0.12, 0.24, 0.35, 0.05, 0.64,
    ],
    p: &[
        0.87, 0.02, 0.76, 0.07, 0.05, 0.11, 0.02, 0.4, 0.28, 0.01, 0.23, 0.19, 0.76, 0.28, 0.32, 0.0, 0.34, 0.02, 0.07,
        0.01, 0.0, 0.0, 0.03, 0.44, 0.05, 0.23, 0.34, 0.03, 0.0, 0.0, 0.11, 0.19, 0.02, 0.44, 0.0, 0.76,
    ],
};

pub(super) const RICE_ELASTICITIES: RawTable = RawTable {
    n: 6,
    effect: &[
        -0.43, 0.11, -0.99, -0.35, -1.51, 3.17, 0.04, -0.21, -0.54, -0.09, -0.72, 1.51, -0.57, -0.84, 0.46, 0.16, 0.98,
        -0.19, 1.71, 1.2, -1.38, 1.91, -1.05, -2.41, 0.97, 1.27, -1.11, -0.14, -2.23, 1.24, -1.2, -1.57, 0.13, -0.19,
        0.73, 2.09,
    ],
    se: &[
        0.33, 0.32, 0.32, 0.1, 0.3, 0.51, 0.12, 0.23, 0.12, 0.04, 0.14, 0.24, 0.18, 0.2, 0.42, 0.21, 0.2, 0.49, 0.47,
        0.53, 1.81, 4.05, 0.55, 2.66, 0.19, 0.25, 0.22, 0.07, 0.25, 0.31, 0.19, 0.25, 0.32, 0.21, 0.18, 0.51,
    ],
    p: &[
        0.2, 0.73, 0.0, 0.0, 0.0, 0.0, 0.73, 0.37, 0.0, 0.02, 0.0, 0.0, 0.0, 0.0, 0.28, 0.45, 0.0, 0.69, 0.0, 0.02,
        0.45, 0.64, 0.05, 0.37, 0.0, 0.0, 0.0, 0.05, 0.0, 0.0, 0.0, 0.0, 0.69, 0.37, 0.0, 0.0,
    ],
};

pub(super) const NONRICE_ELASTICITIES: RawTable = RawTable {
    n: 5,
    effect: &[
        -0.06, -0.05, 0.0, -0.19, 0.31, -0.07, 0.68, 0.03, 0.19, -0.83, 0.06, -0.27, 0.09, -0.22, 0.34, 0.7, -0.51,
        -0.06, -1.18, 1.05, -0.37, 0.72, 0.03, 0.35, -0.72,
    ],
    se: &[
        0.07, 0.05, 0.01, 0.04, 0.09, 0.07, 0.38, 0.09, 0.09, 0.41, 0.15, 0.96, 1.73, 0.19, 1.36, 0.15, 0.23, 0.05,
        0.17, 0.29, 0.11, 0.35, 0.11, 0.1, 0.42,
    ],
    p: &[
        0.39, 0.36, 0.71, 0.0, 0.0, 0.36, 0.08, 0.78, 0.03, 0.04, 0.71, 0.78, 0.96, 0.24, 0.8, 0.0, 0.03, 0.24, 0.0,
        0.0, 0.0, 0.04, 0.8, 0.0, 0.08,
    ],
};

pub(super) const HORT_ELASTICITIES: RawTable = RawTable {
    n: 10,
    effect: &[
        -1.14, 0.68, 3.7, 1.9, -0.27, -1.18, 0.3, 0.8, 0.08, -0.15, 1.29, 5.86, -8.35, -3.68, -0.6, 0.16, -0.64, 1.96,
        -0.02, -0.46, 0.58, -0.69, -5.52, -0.75, 0.16, 0.26, 0.71, 0.03, -0.08, 0.57, 0.2, -0.21, -0.51, 0.15, 0.02,
        0.04, -0.39, -0.1, -0.01, 0.22, -1.54, -1.82, 5.89, 1.0, -0.23, -0.96, 0.55, -0.76, 0.11, 0.36, -0.74, 0.05,
        1.03, 0.21, -0.1, 1.36, -0.16, -0.6, 0.0, 0.01, 0.05, -0.05, 0.73, -0.59, 0.02, -0.04, -0.14, -0.15, 0.0, 0.19,
        -1.67, -2.17, -0.35, 1.95, 0.28, 1.99, 1.95, 0.76, 0.25, -3.8, -1.4, 0.2, 9.25, 0.98, -0.35, -0.1, 0.33, 2.27,
        0.01, -1.75, 0.28, 0.47, -0.71, -0.21, -0.5, -0.18, -0.26, -1.42, -0.26, 3.01,
    ],
    se: &[
        0.81, 0.94, 3.77, 1.19, 0.12, 0.36, 0.95, 0.57, 0.04, 0.23, 1.8, 6.37, 8.66, 2.9, 0.47, 0.64, 3.21, 0.74, 0.07,
        0.23, 0.59, 0.71, 3.59, 1.0, 0.09, 0.25, 0.69, 0.4, 0.04, 0.59, 0.13, 0.16, 0.68, 0.38, 0.03, 0.07, 0.24, 0.12,
        0.01, 0.16, 0.73, 1.57, 3.78, 1.59, 0.2, 0.33, 1.28, 0.48, 0.05, 0.15, 0.23, 0.21, 0.99, 0.43, 0.03, 0.55,
        0.37, 0.34, 0.02, 0.11, 0.16, 0.27, 0.72, 0.37, 0.03, 0.1, 0.33, 0.15, 0.01, 0.26, 1.19, 0.81, 5.38, 2.26,
        0.16, 1.14, 1.91, 2.45, 0.08, 6.03, 0.83, 0.71, 4.36, 1.6, 0.14, 0.49, 1.06, 0.72, 0.08, 0.52, 0.39, 0.25,
        0.76, 0.16, 0.22, 0.44, 0.42, 2.28, 0.08, 2.76,
    ],
    p: &[
        0.16, 0.47, 0.32, 0.11, 0.03, 0.0, 0.76, 0.16, 0.09, 0.48, 0.47, 0.36, 0.33, 0.2, 0.25, 0.8, 0.84, 0.01, 0.78,
        0.06, 0.32, 0.33, 0.12, 0.45, 0.12, 0.3, 0.31, 0.95, 0.03, 0.29, 0.11, 0.2, 0.45, 0.69, 0.53, 0.63, 0.11, 0.39,
        0.54, 0.13, 0.03, 0.25, 0.12, 0.53, 0.29, 0.0, 0.67, 0.11, 0.02, 0.01, 0.0, 0.8, 0.3, 0.63, 0.0, 0.01, 0.66,
        0.08, 0.84, 0.47, 0.76, 0.84, 0.31, 0.11, 0.67, 0.66, 0.67, 0.31, 0.76, 0.45, 0.16, 0.01, 0.95, 0.39, 0.11,
        0.08, 0.31, 0.75, 0.0, 0.59, 0.09, 0.78, 0.03, 0.54, 0.02, 0.84, 0.76, 0.0, 0.93, 0.0, 0.48, 0.06, 0.34, 0.17,
        0.01, 0.43, 0.46, 0.6, 0.0, 0.29,
    ],
};
