import pytest

from lcw.config import load_run_config
from lcw.errors import ConfigError


def write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


class TestValidation:
    def test_unknown_key_named(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\nbogus_option = 1\n')
        with pytest.raises(ConfigError, match="bogus_option"):
            load_run_config(p)

    def test_unknown_section_rejected(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\n[tuning]\nlr = 0.1\n')
        with pytest.raises(ConfigError, match="tuning"):
            load_run_config(p)

    def test_top_level_key_rejected(self, tmp_path):
        p = write(tmp_path, 'preset = "ring"\n')
        with pytest.raises(ConfigError):
            load_run_config(p)

    def test_missing_preset(self, tmp_path):
        p = write(tmp_path, "[dataset]\nn = 100\n")
        with pytest.raises(ConfigError, match="preset"):
            load_run_config(p)

    def test_unknown_preset(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "celeba"\n')
        with pytest.raises(ConfigError, match="celeba"):
            load_run_config(p)

    def test_type_mismatch(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\nn = "many"\n')
        with pytest.raises(ConfigError, match="'n'"):
            load_run_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "absent.toml")

    def test_bad_generator_distance(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\n'
                            '[generator]\ndistance = "mmd"\n')
        with pytest.raises(ConfigError, match="cw or sw"):
            load_run_config(p).generator_config()


class TestPresetDefaults:
    def test_image_family_reference_hyperparameters(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "synth_images"\n')
        run = load_run_config(p)
        cfg = run.stage1_config("cw2")
        assert cfg.lr == 1e-3 and cfg.lam == 1.0 and cfg.latent_dim == 8
        assert cfg.final_activation == "sigmoid"
        cfg2 = run.stage2_config()
        assert cfg2.lr == 5e-4 and cfg2.noise_dim == 8

    def test_planar_family_defaults(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\n')
        run = load_run_config(p)
        cfg = run.stage1_config()
        assert cfg.objective == "cw2"
        assert cfg.latent_dim == 2
        assert cfg.final_activation == "linear"

    def test_section_overrides_defaults(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\n'
                            '[stage1]\nlr = 2.5e-3\nepochs = 5\n')
        cfg = load_run_config(p).stage1_config()
        assert cfg.lr == 2.5e-3 and cfg.epochs == 5

    def test_objective_override_argument_wins(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\n'
                            '[stage1]\nobjective = "cwae"\n')
        assert load_run_config(p).stage1_config("ae").objective == "ae"


class TestDatasetBuilding:
    def test_ring_standardized_by_default(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\nn = 500\nseed = 3\n')
        ds = load_run_config(p).build_dataset()
        assert abs(ds.data.std() - 1.0) < 1e-9

    def test_standardize_opt_out(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\nn = 500\nseed = 3\n'
                            'standardize = false\nradius = 5.0\n')
        ds = load_run_config(p).build_dataset()
        assert ds.data.std() > 2.0

    def test_embedding_and_split(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "ring"\nn = 500\nseed = 3\n'
                            'embed_dim = 16\nvalidation_fraction = 0.2\n')
        ds = load_run_config(p).build_dataset()
        assert ds.dim == 16
        assert len(ds.val_idx) == 100

    def test_csv_preset_requires_path(self, tmp_path):
        p = write(tmp_path, '[dataset]\npreset = "csv"\n')
        with pytest.raises(ConfigError, match="path"):
            load_run_config(p).build_dataset()
