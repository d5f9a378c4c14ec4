//! Reference values for the registry cases, competitor columns included.

/// Moment comparison table: rows of `(t, exact, [(num, rel_err); 3])`, one pair per grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTable {
    pub case: &'static str,
    pub k: &'static [u32],
    pub grids: [usize; 3],
    pub rows: &'static [(f64, f64, [(f64, f64); 3])],
}

pub const MOMENT_TABLES: &[MomentTable] = &[
    MomentTable {
        case: "m1",
        k: &[0],
        grids: [80, 160, 320],
        rows: &[
            (2.0, 3.0, [(3.0088, 2.9199e-3), (3.0022, 7.2990e-4), (3.0005, 1.8225e-4)]),
            (4.0, 5.0, [(5.0405, 8.1078e-3), (5.0101, 2.0288e-3), (5.0025, 5.0729e-4)]),
            (6.0, 7.0, [(7.1111, 1.5875e-2), (7.0278, 3.9769e-3), (7.0070, 9.9468e-4)]),
            (8.0, 9.0, [(9.2358, 2.6198e-2), (9.0592, 6.5730e-3), (9.0148, 1.6446e-3)]),
            (10.0, 11.0, [(11.4295, 3.9046e-2), (11.1080, 9.8152e-3), (11.0270, 2.4571e-3)]),
        ],
    },
    MomentTable {
        case: "m1",
        k: &[1],
        grids: [80, 160, 320],
        rows: &[
            (2.0, 1.0, [(1.0028, 2.7643e-3), (1.0007, 6.8521e-4), (1.0002, 1.6742e-4)]),
            (4.0, 1.0, [(1.0076, 7.5516e-3), (1.0019, 1.8712e-3), (1.0005, 4.6614e-4)]),
            (6.0, 1.0, [(1.0148, 1.4771e-2), (1.0036, 3.6345e-3), (1.0009, 9.0289e-4)]),
            (8.0, 1.0, [(1.0245, 2.4541e-2), (1.0060, 5.9909e-3), (1.0015, 1.4837e-3)]),
            (10.0, 1.0, [(1.0370, 3.6996e-2), (1.0090, 8.9525e-3), (1.0022, 2.2099e-3)]),
        ],
    },
    MomentTable {
        case: "m2",
        k: &[0],
        grids: [80, 160, 320],
        rows: &[
            (0.15, 1.1765, [(1.1685, 6.7832e-3), (1.1675, 7.6553e-3), (1.2398, 8.1714e-3)]),
            (0.3, 1.4286, [(1.4214, 5.0260e-3), (1.4165, 8.4154e-3), (1.4152, 9.3373e-3)]),
            (0.45, 1.8182, [(1.8306, 6.8034e-3), (1.8060, 6.7244e-3), (1.7986, 1.0747e-2)]),
            (0.6, 2.5, [(2.6810, 7.2388e-2), (2.5278, 1.1126e-2), (2.4794, 8.2411e-3)]),
            (0.75, 4.0, [(7.3156, 8.2891e-1), (4.7208, 1.8020e-1), (4.1591, 3.9767e-2)]),
        ],
    },
    MomentTable {
        case: "m2",
        k: &[1],
        grids: [80, 160, 320],
        rows: &[
            (0.15, 1.0, [(0.9598, 4.0162e-2), (0.9596, 4.0430e-2), (0.9595, 4.0471e-2)]),
            (0.3, 1.0, [(0.9601, 3.9899e-2), (0.9596, 4.0410e-2), (0.9595, 4.0517e-2)]),
            (0.45, 1.0, [(0.9636, 3.6355e-2), (0.9599, 4.0127e-2), (0.9595, 4.0510e-2)]),
            (0.6, 1.0, [(0.9670, 3.3028e-2), (0.9612, 3.8834e-2), (0.9597, 4.0280e-2)]),
            (0.75, 1.0, [(1.0333, 3.3329e-2), (0.9707, 2.9326e-2), (0.9616, 3.8415e-2)]),
        ],
    },
    MomentTable {
        case: "m3",
        k: &[0],
        grids: [80, 160, 320],
        rows: &[
            (1.0, 2.0, [(2.0022, 1.1187e-3), (2.0005, 2.4559e-4), (2.0001, 2.7344e-5)]),
            (2.0, 3.0, [(3.0041, 1.3664e-3), (3.0010, 3.4126e-4), (3.0003, 8.5073e-5)]),
            (3.0, 4.0, [(4.0061, 1.5290e-3), (4.0015, 3.8206e-4), (4.0004, 9.5491e-5)]),
            (4.0, 5.0, [(5.0083, 1.6678e-3), (5.0021, 4.1663e-4), (5.0005, 1.0412e-4)]),
            (5.0, 6.0, [(6.0107, 1.7903e-3), (6.0027, 4.4710e-4), (6.0007, 1.1171e-4)]),
        ],
    },
    MomentTable {
        case: "m3",
        k: &[1],
        grids: [80, 160, 320],
        rows: &[
            (1.0, 1.0, [(1.0025, 2.4796e-3), (1.0002, 2.4480e-4), (0.9997, 3.1339e-4)]),
            (2.0, 1.0, [(1.0034, 3.4059e-3), (1.0008, 8.4613e-4), (1.0002, 2.0768e-4)]),
            (3.0, 1.0, [(1.0037, 3.6501e-3), (1.0009, 9.0809e-4), (1.0002, 2.2646e-4)]),
            (4.0, 1.0, [(1.0038, 3.7598e-3), (1.0009, 9.3047e-4), (1.0002, 2.3141e-4)]),
            (5.0, 1.0, [(1.0038, 3.7651e-3), (1.0009, 9.2367e-4), (1.0002, 2.2862e-4)]),
        ],
    },
    MomentTable {
        case: "m4",
        k: &[0],
        grids: [80, 160, 320],
        rows: &[
            (1.0, 1.98, [(2.0029, 1.1584e-2), (2.0007, 1.0437e-2), (2.0001, 1.0151e-2)]),
            (2.0, 2.96, [(3.0052, 1.5268e-2), (3.0013, 1.3952e-2), (3.0003, 1.3623e-2)]),
            (3.0, 3.94, [(4.0076, 1.7159e-2), (4.0019, 1.5711e-2), (4.0005, 1.5349e-2)]),
            (4.0, 4.92, [(5.0102, 1.8337e-2), (5.0026, 1.6779e-2), (5.0006, 1.6390e-2)]),
            (5.0, 5.9, [(6.0130, 1.9154e-2), (6.0032, 1.7500e-2), (6.0008, 1.7087e-2)]),
        ],
    },
    MomentTable {
        case: "m4",
        k: &[1],
        grids: [80, 160, 320],
        rows: &[
            (1.0, 1.0, [(1.0035, 3.4855e-3), (1.0005, 4.9590e-4), (0.9997, 2.5064e-4)]),
            (2.0, 1.0, [(1.0045, 4.4717e-3), (1.0011, 1.1122e-3), (1.0003, 2.7416e-4)]),
            (3.0, 1.0, [(1.0047, 4.7470e-3), (1.0012, 1.1819e-3), (1.0003, 2.9488e-4)]),
            (4.0, 1.0, [(1.0049, 4.8763e-3), (1.0012, 1.2092e-3), (1.0003, 3.0108e-4)]),
            (5.0, 1.0, [(1.0049, 4.8938e-3), (1.0012, 1.2056e-3), (1.0003, 2.9908e-4)]),
        ],
    },
    MomentTable {
        case: "m5",
        k: &[0, 0],
        grids: [80, 120, 160],
        rows: &[
            (0.6, 2.8, [(2.82284, 8.16e-3), (2.81821, 6.5e-3), (2.81675, 5.98e-3)]),
            (1.2, 4.6, [(4.6746, 1.62e-2), (4.66369, 1.38e-2), (4.66034, 1.31e-2)]),
            (1.8, 6.4, [(6.54567, 2.28e-2), (6.52703, 1.98e-2), (6.52139, 1.89e-2)]),
            (2.4, 8.2, [(8.43004, 2.81e-2), (8.40241, 2.46e-2), (8.39413, 2.37e-2)]),
            // garbled middle entry restored from its Num column
            (3.0, 10.0, [(10.324, 3.24e-2), (10.2862, 2.862e-2), (10.275, 2.75e-2)]),
        ],
    },
    MomentTable {
        case: "m5",
        k: &[1, 1],
        grids: [20, 40, 60],
        rows: &[
            (0.6, 1.0, [(1.0113, 1.13e-2), (1.00989, 9.89e-3), (1.00944, 9.44e-3)]),
            (1.2, 1.0, [(1.0175, 1.75e-2), (1.01572, 1.57e-2), (1.01517, 1.52e-2)]),
            (1.8, 1.0, [(1.0217, 2.17e-2), (1.01957, 1.96e-2), (1.01893, 1.89e-2)]),
            (2.4, 1.0, [(1.02462, 2.46e-2), (1.02222, 2.22e-2), (1.0215, 2.15e-2)]),
            (3.0, 1.0, [(1.02616, 2.62e-2), (1.02411, 2.41e-2), (1.02332, 2.33e-2)]),
        ],
    },
    MomentTable {
        case: "m6",
        k: &[0, 0, 0],
        grids: [15, 20, 25],
        rows: &[
            (0.4, 3.8, [(3.89905, 2.62e-2), (3.8675, 1.78e-2), (3.85306, 1.39e-2)]),
            (0.8, 6.6, [(6.9867, 5.85e-2), (6.83627, 3.57e-2), (6.7907, 2.89e-2)]),
            (1.2, 9.4, [(10.0945, 7.38e-2), (9.88797, 5.19e-2), (9.79495, 4.2e-2)]),
            (1.6, 12.2, [(13.3592, 9.5e-2), (13.0095, 6.64e-2), (12.853, 5.35e-2)]),
            (2.0, 15.0, [(16.722, 1.15e-1), (16.1918, 7.94e-2), (15.9563, 6.37e-2)]),
        ],
    },
    MomentTable {
        case: "m6",
        k: &[1, 1, 1],
        grids: [15, 20, 25],
        rows: &[
            (0.4, 1.0, [(1.02564, 2.56e-2), (1.01939, 1.94e-2), (1.01652, 1.65e-2)]),
            (0.8, 1.0, [(1.04262, 4.26e-2), (1.03228, 3.22e-2), (1.02758, 2.76e-2)]),
            (1.2, 1.0, [(1.05674, 5.67e-2), (1.04247, 4.25e-2), (1.03602, 3.6e-2)]),
            (1.6, 1.0, [(1.06895, 6.89e-2), (1.05086, 5.09e-2), (1.04272, 4.27e-2)]),
            (2.0, 1.0, [(1.07989, 7.98e-2), (1.05803, 5.8e-2), (1.04825, 4.82e-2)]),
        ],
    },
];

/// 1D error table rows `(N, L2, RelLinf, H1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTable1D {
    pub case: &'static str,
    pub rows: &'static [(usize, f64, f64, f64)],
    /// Printed orders `(L2, RelLinf, H1)` for every row after the first.
    pub eoc: &'static [(f64, f64, f64)],
}

pub const C1_ERRORS: ErrorTable1D = ErrorTable1D {
    case: "c1",
    rows: &[
        (20, 5.0971e-2, 3.7500e-3, 6.2539e-1),
        (40, 1.2882e-2, 9.3750e-4, 3.0119e-1),
        (80, 3.2293e-3, 2.3437e-4, 1.4752e-1),
        (160, 8.0789e-4, 5.8594e-5, 7.2971e-2),
        (320, 2.0201e-4, 1.4648e-5, 3.6286e-2),
    ],
    eoc: &[(1.98, 2.00, 1.05), (2.00, 2.00, 1.03), (2.00, 2.00, 1.02), (2.00, 2.00, 1.01)],
};

pub const C2_ERRORS: ErrorTable1D = ErrorTable1D {
    case: "c2",
    rows: &[
        (80, 1.0424e-1, 4.6160e-4, 5.1007),
        (160, 2.9550e-2, 1.1967e-4, 2.7061),
        (320, 7.5001e-3, 3.0466e-5, 1.3660),
        (640, 1.8822e-3, 7.6859e-6, 6.8373e-1),
        (1280, 4.7099e-4, 1.9302e-6, 3.4172e-1),
    ],
    eoc: &[(1.82, 1.95, 0.91), (1.98, 1.97, 0.99), (1.99, 1.99, 1.00), (2.00, 1.99, 1.00)],
};

/// Point values at `x = 5` for `c1`: `(t, exact, [VIM, MVIM, FEM] solutions,
/// [VIM, MVIM, FVM, FEM] absolute errors)`.
pub const C1_POINT_VALUES: &[(f64, f64, [f64; 3], [f64; 4])] = &[
    (0.3, 0.00250, [0.00250, 0.00250, 0.00250], [1.855e-5, 4.175e-6, 9.756e-6, 2.5319e-8]),
    (0.6, 0.00085, [0.00180, 0.00105, 0.00085], [1.028e-3, 2.003e-4, 6.8776e-4, 8.2486e-8]),
    (0.9, 0.00027, [0.01040, 0.00194, 0.00027], [1.019e-2, 1.670e-3, 2.138e-3, 1.6618e-7]),
    (1.2, 8.084e-5, [0.05000, 0.00689, 8.112e-5], [5.032e-2, 6.815e-3, 7.485e-3, 2.8230e-7]),
    (1.5, 2.329e-5, [0.17040, 0.01880, 2.373e-5], [1.704e-1, 1.886e-2, 2.424e-2, 4.3395e-7]),
    (1.8, 6.519e-6, [0.45600, 0.04090, 7.14e-6], [4.560e-1, 4.098e-2, 1.356e-2, 6.2158e-7]),
];

/// Relative errors of `c1` on `[0, 10]` at `t = 1.0, 1.5, …, 3.0` plus CPU seconds.
pub const C1_METHOD_COMPARISON: &[(&str, [f64; 5], f64)] = &[
    ("HPM", [4.8030e-5, 2.6833e-4, 7.9302e-4, 1.6617e-3, 2.8746e-3], 5.96),
    ("BLUES", [4.8030e-5, 2.6833e-4, 7.9302e-4, 1.6617e-3, 2.8746e-3], 11.81),
    ("APM", [6.8014e-5, 7.5897e-5, 7.6001e-5, 7.0496e-5, 6.0488e-5], 22.78),
    ("FEM", [3.6621e-6, 5.2734e-6, 6.5104e-6, 7.4737e-6, 8.2397e-6], 2.51),
];

/// `c2` L¹ errors at `t = 10`: `(N, nonuniform existing, nonuniform FEM, random existing, random FEM)`.
pub const C2_GRID_L1: &[(usize, f64, f64, f64, f64)] = &[
    (60, 9.02e-2, 4.0071e-1, 0.35, 4.0228e-1),
    (120, 3.87e-2, 1.3689e-1, 0.21, 1.3701e-1),
    (240, 1.77e-2, 4.0138e-2, 0.19, 4.0135e-2),
    (480, 8.40e-3, 1.0877e-2, 0.19, 1.0877e-2),
    (960, 4.09e-3, 2.8316e-3, 0.19, 2.8316e-3),
];

/// Tensor-grid error table: rows `(h, [(L2, H1, RelErr); 3])` for degrees 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTableTensor {
    pub case: &'static str,
    pub rows: &'static [(f64, [(f64, f64, f64); 3])],
    /// Printed L² orders per degree at the finest pair.
    pub finest_l2_eoc: [f64; 3],
}

pub const C3_ERRORS: ErrorTableTensor = ErrorTableTensor {
    case: "c3",
    rows: &[
        (1.41421, [(3.48014, 11.9988, 0.876857), (0.573831, 4.45592, 0.144583), (0.262906, 2.45866, 0.0662418)]),
        (0.707107, [(0.996604, 6.88312, 0.249286), (0.0819333, 1.39383, 0.0204944), (0.0197745, 0.345652, 0.0049463)]),
        (0.353553, [(0.257915, 3.59375, 0.0645007), (0.0106545, 0.371731, 0.00266453), (0.00131421, 0.0375924, 0.000328663)]),
        (0.176777, [(0.0648008, 1.81799, 0.0162056), (0.00134638, 0.0944768, 0.000336707), (8.4596e-5, 0.00417299, 2.11561e-5)]),
        (0.0883883, [(0.0161848, 0.9117, 0.00404756), (1.68756e-4, 0.0237149, 4.22033e-5), (5.37065e-6, 0.000573742, 1.34311e-6)]),
    ],
    finest_l2_eoc: [2.001, 2.996, 3.977],
};

pub const C4_ERRORS: ErrorTableTensor = ErrorTableTensor {
    case: "c4",
    rows: &[
        (3.4641, [(53.3902, 101.214, 9.02967), (21.9696, 69.2115, 3.71563), (9.43861, 43.3467, 1.59631)]),
        (1.73205, [(15.5819, 53.5353, 1.99624), (3.07934, 22.0405, 0.394505), (1.17462, 10.88, 0.150484)]),
        (0.866025, [(4.18123, 26.8678, 0.523308), (0.43134, 6.97008, 0.053985), (0.0963823, 1.71704, 0.0120629)]),
        (0.433013, [(1.06363, 13.3194, 0.133023), (0.0556957, 1.86878, 0.00696557), (0.00661202, 0.207545, 0.000826931)]),
    ],
    finest_l2_eoc: [1.975, 2.953, 3.866],
};

pub fn moment_table(case: &str, k: &[u32]) -> Option<&'static MomentTable> {
    MOMENT_TABLES.iter().find(|t| t.case == case && t.k == k)
}
