//! Benchmark inputs shared by the criterion targets.

/// Drug-sized products of varying shape.
pub const PRODUCTS: [&str; 4] = [
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "CN1CCN(CC1)c1ccc(cc1)C(=O)Nc1ccc(C)c(Nc2nccc(n2)-c2cccnc2)c1",
    "C[C@H]1CN(CCN1C(=O)c1ccc(c(Cl)c1)S(=O)CC(=O)C(C)(F)F)c1cccc(Cl)c1",
    "C12C3C4C1C5C2C3C45",
];

pub const REACTION: &str =
    "[CH3:1][C:2](=[O:3])[Cl:5].[NH2:4][CH3:6]>>[CH3:1][C:2](=[O:3])[NH:4][CH3:6]";

pub const POSITION_REPLY: &str = r#"Sure.
```json
{
  // two sites
  "disconnections": [
    {"disconnection": "C:2 N:4", "reactions": [
      {"forwardReaction": "Amide Schotten-Baumann", "forwardReactionClass": "Acylation",
       "isInOntology": true, "Retrosynthesis Importance": 4, "Priority": 1, "rationale": "amide",},
    ]},
  ]
}
```"#;
