//! Dense `(batch, time, channel)` arrays with reverse-mode differentiation.

pub mod array;
pub mod exec;
pub mod gradcheck;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod tape;

pub use array::Tensor;
pub use exec::{forward, graph_param_specs, init_graph_params, positional_signal, Forward, Mode};
pub use optim::Adam;
pub use params::{Init, ParamSpec, ParameterStore};
pub use scalar::Scalar;
pub use tape::{BatchStats, Gradients, Tape, Var};

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: [usize; 3], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape, v).unwrap()
    }

    #[test]
    fn relu_clips_negatives() {
        let mut tape = Tape::new();
        let x = tape.leaf(t([1, 1, 3], &[-1.0, 0.0, 2.0]));
        let y = tape.relu(x).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn layer_norm_of_constant_row_is_zero() {
        let mut tape = Tape::new();
        let x = tape.leaf(t([1, 1, 4], &[3.0; 4]));
        let g = tape.leaf(t([1, 1, 4], &[1.0; 4]));
        let b = tape.leaf(t([1, 1, 4], &[0.0; 4]));
        let y = tape.layer_norm(x, g, b).unwrap();
        assert!(tape.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn swish_at_zero() {
        let mut tape = Tape::new();
        let x = tape.leaf(t([1, 1, 1], &[0.0]));
        let y = tape.swish(x).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0]);
    }

    #[test]
    fn sum_gradient_is_ones_and_fan_out_adds() {
        let mut tape = Tape::new();
        let x = tape.leaf(t([2, 2, 2], &[0.5; 8]));
        let l = tape.sum(x).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.wrt(x).unwrap(), &[1.0; 8]);

        let mut tape = Tape::new();
        let x = tape.leaf(t([1, 1, 2], &[1.0, 2.0]));
        let y = tape.add(x, x).unwrap();
        let l = tape.sum(y).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.wrt(x).unwrap(), &[2.0, 2.0]);
    }

    #[test]
    fn backward_on_empty_tape_is_rejected() {
        let mut other = Tape::<f64>::new();
        let v = other.leaf(Tensor::zeros([1, 1, 1]));
        let tape = Tape::<f64>::new();
        assert!(matches!(tape.backward(v), Err(crate::Error::Contract { .. })));
    }

    #[test]
    fn checkpoint_round_trips() {
        let specs = vec![
            ParamSpec::new("a", [2, 3, 4], Init::TruncatedNormal),
            ParamSpec::new("b", [1, 1, 4], Init::Ones),
        ];
        let mut store = ParameterStore::<f32>::init(&specs, 9).unwrap();
        store.set_buffer("n0.running_mean", vec![0.25; 4]);
        let bytes = store.to_bytes();
        let back = ParameterStore::<f32>::from_bytes(&bytes).unwrap();
        assert_eq!(back.names(), store.names());
        assert_eq!(back.value(0), store.value(0));
        assert_eq!(back.buffer("n0.running_mean"), Some(&[0.25f32; 4][..]));
        assert!(ParameterStore::<f64>::from_bytes(&bytes).is_err());
        assert!(ParameterStore::<f32>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn init_is_truncated_and_deterministic() {
        let specs = vec![ParamSpec::new("w", [1, 50, 40], Init::TruncatedNormal)];
        let a = ParameterStore::<f64>::init(&specs, 1).unwrap();
        let b = ParameterStore::<f64>::init(&specs, 1).unwrap();
        assert_eq!(a.value(0), b.value(0));
        assert!(a.value(0).data().iter().all(|v| v.abs() <= 0.04));
    }
}
