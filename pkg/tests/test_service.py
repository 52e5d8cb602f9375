import json
import threading
import time

import numpy as np
import pytest

from imgany import FusionConfig, run_pipeline
from imgany.bank import save_bank
from imgany.wire import bundle_json_bytes
from imgany.service import FusionService, ServiceConfig

from synth import random_bank, random_features
from util import http_get, http_post, service_running

DIM = 16


@pytest.fixture(scope="module")
def bank_paths(tmp_path_factory):
    rng = np.random.default_rng(100)
    root = tmp_path_factory.mktemp("banks")
    noun = random_bank(rng, 100, DIM, "noun", prefix="n")
    adjective = random_bank(rng, 100, DIM, "adjective", keep_false_frac=0.37, prefix="a")
    save_bank(noun, root / "nouns.imgb")
    save_bank(adjective, root / "adjectives.imgb")
    return root / "nouns.imgb", root / "adjectives.imgb", noun, adjective


@pytest.fixture(scope="module")
def service(bank_paths):
    noun_path, adjective_path, _, _ = bank_paths
    with service_running(noun_path, adjective_path) as svc:
        yield svc


def feature_bodies(features):
    return [{"modality": f.tag.label, "embedding": [float(x) for x in f.embedding]}
            for f in features]


class TestHealthAndBanks:
    def test_health_ok(self, service):
        status, body = http_get(service.url + "/v1/health")
        assert status == 200
        assert json.loads(body) == {"status": "ok"}

    def test_health_503_before_load(self, bank_paths):
        noun_path, adjective_path, _, _ = bank_paths
        with service_running(noun_path, adjective_path, load=False) as svc:
            status, body = http_get(svc.url + "/v1/health")
            assert status == 503
            assert json.loads(body) == {"status": "loading"}
            status, _ = http_post(svc.url + "/v1/fuse", {"features": []})
            assert status == 503

    def test_bank_metadata(self, service, bank_paths):
        _, _, noun, adjective = bank_paths
        status, body = http_get(service.url + "/v1/banks")
        assert status == 200
        banks = json.loads(body)["banks"]
        assert banks["noun"]["count"] == 100
        assert banks["noun"]["dim"] == DIM
        assert banks["noun"]["filtered_count"] == 100
        assert banks["adjective"]["count"] == 100
        assert banks["adjective"]["filtered_count"] == int(np.count_nonzero(adjective.keep))

    def test_unknown_endpoint(self, service):
        status, body = http_get(service.url + "/v1/nope")
        assert status == 404
        assert json.loads(body)["code"] == "NotFound"


class TestFuse:
    def test_single_text_feature(self, service):
        rng = np.random.default_rng(1)
        [f] = random_features(rng, 1, DIM, tags=None)
        status, body = http_post(service.url + "/v1/fuse",
                                 {"features": feature_bodies([f])})
        assert status == 200
        obj = json.loads(body)
        assert obj["entity_weights"]["normalized"] == {f.tag.label: 1.0}
        assert obj["variance"] == 0.0
        assert len(obj["c1"]) == DIM

    def test_duplicate_modality_400(self, service):
        rng = np.random.default_rng(2)
        [f] = random_features(rng, 1, DIM)
        bodies = feature_bodies([f, f])
        status, body = http_post(service.url + "/v1/fuse", {"features": bodies})
        assert status == 400
        err = json.loads(body)
        assert err["code"] == "DuplicateModality"

    def test_dim_mismatch_400_names_stage(self, service):
        rng = np.random.default_rng(3)
        [f] = random_features(rng, 1, DIM + 4)
        status, body = http_post(service.url + "/v1/fuse",
                                 {"features": feature_bodies([f])})
        assert status == 400
        err = json.loads(body)
        assert err["code"] == "DimMismatch"
        assert err["stage"] == "ingest"

    def test_malformed_json_400(self, service):
        status, body = http_post(service.url + "/v1/fuse", b"{not json")
        assert status == 400
        assert json.loads(body)["code"] == "BadJson"

    def test_unknown_config_key_400(self, service):
        rng = np.random.default_rng(4)
        [f] = random_features(rng, 1, DIM)
        status, body = http_post(service.url + "/v1/fuse", {
            "features": feature_bodies([f]), "config": {"zoom": 2}})
        assert status == 400
        assert json.loads(body)["code"] == "UnknownConfigKey"

    def test_config_overrides_apply(self, service):
        rng = np.random.default_rng(5)
        features = random_features(rng, 2, DIM)
        status, body = http_post(service.url + "/v1/fuse", {
            "features": feature_bodies(features),
            "config": {"k_entity": 2, "enable_attribute_branch": False}})
        assert status == 200
        obj = json.loads(body)
        assert obj["config"]["k_entity"] == 2
        assert obj["attribute_weights"] is None
        assert obj["c3"] == ""
        assert obj["alpha"] == 1.0

    def test_idempotent_identical_bytes(self, service):
        rng = np.random.default_rng(6)
        payload = {"features": feature_bodies(random_features(rng, 3, DIM))}
        body_bytes = json.dumps(payload).encode()
        _, first = http_post(service.url + "/v1/fuse", body_bytes)
        _, second = http_post(service.url + "/v1/fuse", body_bytes)
        assert first == second

    def test_matches_in_process_pipeline_bytes(self, service, bank_paths):
        _, _, noun, adjective = bank_paths
        rng = np.random.default_rng(7)
        features = random_features(rng, 3, DIM)
        status, body = http_post(service.url + "/v1/fuse",
                                 {"features": feature_bodies(features)})
        assert status == 200
        bundle = run_pipeline(features, noun, adjective, FusionConfig())
        assert body == bundle_json_bytes(bundle)

    def test_body_limit_413(self, bank_paths):
        noun_path, adjective_path, _, _ = bank_paths
        with service_running(noun_path, adjective_path, max_body_bytes=1024) as svc:
            rng = np.random.default_rng(8)
            payload = {"features": feature_bodies(random_features(rng, 3, DIM))}
            status, body = http_post(svc.url + "/v1/fuse", payload)
            assert status == 413
            assert json.loads(body)["code"] == "BodyTooLarge"

    def test_missing_features_400(self, service):
        status, body = http_post(service.url + "/v1/fuse", {})
        assert status == 400
        assert json.loads(body)["code"] == "EmptyInput"

    def test_zero_embedding_400(self, service):
        status, body = http_post(service.url + "/v1/fuse", {
            "features": [{"modality": "Text", "embedding": [0.0] * DIM}]})
        assert status == 400
        assert json.loads(body)["code"] == "ZeroVector"


class TestLifecycle:
    def test_shutdown_completes_inflight_request(self, bank_paths):
        noun_path, adjective_path, _, _ = bank_paths
        with service_running(noun_path, adjective_path) as svc:
            original = svc.fuse

            def slow_fuse(features, config):
                time.sleep(0.6)
                return original(features, config)

            svc.fuse = slow_fuse
            rng = np.random.default_rng(9)
            payload = {"features": feature_bodies(random_features(rng, 2, DIM))}
            result = {}

            def post():
                result["status"], result["body"] = http_post(svc.url + "/v1/fuse", payload)

            poster = threading.Thread(target=post)
            poster.start()
            time.sleep(0.2)  # request is now sleeping inside the handler
            svc.shutdown()
            svc.close()  # joins handler threads; the response must have been sent
            poster.join(timeout=5)
            assert result["status"] == 200
            assert json.loads(result["body"])["alpha"] in (0.5, 0.6)

    def test_requests_race_cleanly(self, service):
        rng = np.random.default_rng(10)
        payloads = [{"features": feature_bodies(random_features(rng, 2, DIM))}
                    for _ in range(8)]
        results = [None] * len(payloads)

        def hit(i):
            results[i] = http_post(service.url + "/v1/fuse", payloads[i])

        threads = [threading.Thread(target=hit, args=(i,)) for i in range(len(payloads))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(status == 200 for status, _ in results)


class TestServiceConfigValidation:
    def test_load_banks_rejects_swapped_paths(self, bank_paths, tmp_path):
        noun_path, adjective_path, _, _ = bank_paths
        from imgany.errors import WrongKindError
        svc = FusionService(ServiceConfig(
            noun_bank_path=str(adjective_path), adjective_bank_path=str(noun_path),
            host="127.0.0.1", port=0))
        try:
            with pytest.raises(WrongKindError):
                svc.load_banks()
        finally:
            svc.close()

    def test_load_banks_rejects_dim_mismatch(self, bank_paths, tmp_path):
        noun_path, _, _, _ = bank_paths
        other = random_bank(np.random.default_rng(11), 10, DIM + 4, "adjective")
        other_path = tmp_path / "other.imgb"
        save_bank(other, other_path)
        from imgany.errors import DimMismatchError
        svc = FusionService(ServiceConfig(
            noun_bank_path=str(noun_path), adjective_bank_path=str(other_path),
            host="127.0.0.1", port=0))
        try:
            with pytest.raises(DimMismatchError):
                svc.load_banks()
        finally:
            svc.close()
