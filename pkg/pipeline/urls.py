from django.urls import path

from .views import ProfileCompareView, ProfileGraphView, ProfileInspectView

app_name = 'pipeline'
urlpatterns = [
    path('profiles/inspect/', ProfileInspectView.as_view(), name='profile-inspect'),
    path('profiles/graph/', ProfileGraphView.as_view(), name='profile-graph'),
    path('profiles/compare/', ProfileCompareView.as_view(), name='profile-compare'),
]
