/// Canonical feature labels, index `i` holding feature `i + 1`.
pub const FEATURE_NAMES: [&str; 107] = [
    // Pulse amplitudes and intervals.
    "Systolic Peak",
    "Diastolic Peak",
    "Height of Notch",
    "Systolic Peak Time",
    "Diastolic Peak Time",
    "Height of Notch Time",
    "ΔT",
    "Pulse Interval",
    "Peak to Peak Interval",
    "Pulse Width",
    "Inflection Point Area",
    "Augmentation Index",
    "Alternative Augmentation Index",
    "Systolic Peak Output Curve",
    "Diastolic Peak Downward Curve",
    "t1/tpp",
    "t2/tpp",
    "t3/tpp",
    "ΔT/tpp",
    "z/x",
    "t2/z",
    "t3/y",
    "x/(tpi-t1)",
    "z/(tpi-t2)",
    // Widths.
    "Width(25%)",
    "Width(75%)",
    "Width(25%)/t1",
    "Width(25%)/t2",
    "Width(25%)/t3",
    "Width(25%)/ΔT",
    "Width(25%)/tpi",
    "Width(50%)/t1",
    "Width(50%)/t2",
    "Width(50%)/t3",
    "Width(50%)/ΔT",
    "Width(50%)/tpi",
    "Width(75%)/t1",
    "Width(75%)/t2",
    "Width(75%)/t3",
    "Width(75%)/ΔT",
    "Width(75%)/tpi",
    // Derivatives.
    "a1",
    "ta1",
    "a2",
    "ta2",
    "b1",
    "tb1",
    "b2",
    "tb2",
    "b2/a2",
    "b1/a1",
    "ta1/tpp",
    "tb1/tpp",
    "tb2/tpp",
    "ta2/tpp",
    "(ta1-ta2)/tpp",
    "(tb1-tb2)/tpp",
    // Demographics over intervals.
    "Height/ΔT",
    "Weight/ΔT",
    "BMI/ΔT",
    "Height/t1",
    "Weight/t1",
    "BMI/t1",
    "Height/t2",
    "Weight/t2",
    "BMI/t2",
    "Height/t3",
    "Weight/t3",
    "BMI/t3",
    "Height/tpi",
    "Weight/tpi",
    "BMI/tpi",
    "Height/tpp",
    "Weight/tpp",
    "BMI/tpp",
    // Spectrum.
    "peak-1",
    "peak-2",
    "peak-3",
    "Freq-1",
    "Freq-2",
    "Freq-3",
    "A0-2",
    "A2-5",
    "A0-2/A2-5",
    "Peak-1/peak-2",
    "Peak-1/peak-3",
    "Freq-1/Freq-2",
    "Freq-1/Freq-3",
    "Maximum Frequency",
    "Magnitude at Fmax",
    "Ratio of signal energy",
    // Statistics.
    "Mean",
    "Median",
    "Standard Deviation",
    "Percentile",
    "Mean Absolute Deviation",
    "Inter Quartile Range",
    "Skewness",
    "Kurtosis",
    "Shannon's Entropy",
    "Spectral Entropy",
    // Demographics.
    "Height",
    "Weight",
    "Gender",
    "Age",
    "BMI",
    "Heart rate",
];

/// Zero-based column of 1-based feature `number`.
pub const fn col(number: usize) -> usize {
    number - 1
}

pub fn index_of(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}
