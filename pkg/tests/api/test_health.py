"""API-level tests for the health endpoint."""

from fastapi import status


class TestHealth:
    """Tests for GET /health endpoint."""

    def test_health(self, client):
        """Health check reports the service and the emitter line."""
        response = client.get("/health")

        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert data["status"] == "healthy"
        assert data["zpl_nm"] == 637.0
