use robvario::contamination::ContaminationSpec;
use robvario::estimators::EstimatorId;
use robvario::grid::{Direction, LagSet};
use robvario::simfield::FieldSpec;
use robvario::study::{run_bias_rmse_study, StudySpec};
use robvario::variomodel::AnisoModel;

fn spec(reps: usize, seed: u64) -> StudySpec {
    let mut s = StudySpec::new(
        FieldSpec::new(AnisoModel::reference(), 15, 15),
        vec![LagSet::new(Direction::EW, 4).unwrap(), LagSet::new(Direction::SWNE, 3).unwrap()],
        vec![EstimatorId::Matheron, EstimatorId::Genton, EstimatorId::McdOrgRe],
    );
    s.contamination = Some(ContaminationSpec::block(0.05, 3.0, 1.0));
    s.replications = reps;
    s.base_seed = seed;
    s
}

#[test]
fn same_seed_reproduces_exactly() {
    let a = run_bias_rmse_study(&spec(60, 5)).unwrap();
    let b = run_bias_rmse_study(&spec(60, 5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn halved_replications_agree_within_monte_carlo_error() {
    let full = run_bias_rmse_study(&spec(400, 11)).unwrap();
    let half = run_bias_rmse_study(&spec(200, 12)).unwrap();
    assert_eq!(full.cells.len(), half.cells.len());
    for (a, b) in full.cells.iter().zip(&half.cells) {
        assert_eq!((a.estimator, a.direction, a.lag), (b.estimator, b.direction, b.lag));
        let se = (a.se_bias.powi(2) + b.se_bias.powi(2)).sqrt();
        assert!((a.bias - b.bias).abs() < 6.0 * se, "bias {a:?} vs {b:?}");
        let se = (a.se_rmse.powi(2) + b.se_rmse.powi(2)).sqrt();
        assert!((a.rmse - b.rmse).abs() < 6.0 * se, "rmse {a:?} vs {b:?}");
    }
}
