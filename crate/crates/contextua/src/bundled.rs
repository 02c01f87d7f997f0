//! Scenarios shipped with the tool.

pub const C3_SINGLE_BASIS: &str = include_str!("../scenarios/c3_single_basis.json");
pub const C4_CABELLO18: &str = include_str!("../scenarios/c4_cabello18.json");
pub const C3_MUB: &str = include_str!("../scenarios/c3_mub.json");
pub const CHSH_SINGLET: &str = include_str!("../scenarios/chsh_singlet.json");
pub const QUBIT_PAULI_SWAP: &str = include_str!("../scenarios/qubit_pauli_swap.json");
pub const QUTRIT_MUB_PAIR: &str = include_str!("../scenarios/qutrit_mub_pair.json");

/// `(file name, contents)` for every bundled scenario.
pub const ALL: [(&str, &str); 6] = [
    ("c3_single_basis.json", C3_SINGLE_BASIS),
    ("c4_cabello18.json", C4_CABELLO18),
    ("c3_mub.json", C3_MUB),
    ("chsh_singlet.json", CHSH_SINGLET),
    ("qubit_pauli_swap.json", QUBIT_PAULI_SWAP),
    ("qutrit_mub_pair.json", QUTRIT_MUB_PAIR),
];
